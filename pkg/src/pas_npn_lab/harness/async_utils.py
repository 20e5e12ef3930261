import asyncio
import logging
from collections.abc import Awaitable, Callable

import culsans

logger = logging.getLogger(__name__)


def new_work_queue() -> culsans.Queue:
    """Unbounded queue fed from synchronous code; ``None`` is the shutdown signal."""
    return culsans.Queue()


async def async_consumer_with_task_group_and_result_processor(
    queue: culsans.Queue,
    coroutine: Callable[[object], Awaitable],
    result_processor: Callable[[list], Awaitable],
    timeout_seconds: float = 30.0,
    max_concurrent: int = 1,
):
    """
    Executes coroutines from the queue with a concurrency limit.
    At the end of the coroutines, call the result_processor with all results
    in submission order.

    Args:
        queue: Queue of work items, terminated by ``None``
        coroutine: The coroutine to execute for each queue item
        result_processor: Coroutine that receives a list of all results
        timeout_seconds: Inactivity timeout for queue reads
        max_concurrent: Maximum number of concurrent coroutines
    """
    semaphore = asyncio.Semaphore(max_concurrent)

    async def limited_coroutine(item):
        async with semaphore:
            return await coroutine(item)

    results = []
    async with asyncio.TaskGroup() as tg:
        while True:
            try:
                item = await asyncio.wait_for(queue.async_q.get(), timeout=timeout_seconds)
            except asyncio.TimeoutError:
                logger.info(f"Consumer timeout after {timeout_seconds=}s of inactivity, shutting down")
                break
            try:
                if item is None:
                    logger.debug("Received shutdown signal, stopping consumer")
                    break
                results.append(tg.create_task(limited_coroutine(item)))
            finally:
                queue.async_q.task_done()

    all_results = [task.result() for task in results]
    logger.info(f"Processing {len(all_results)} results")
    await result_processor(all_results)
