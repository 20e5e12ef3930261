import asyncio
import pytest
from unittest.mock import AsyncMock

from pas_npn_lab.harness.async_utils import async_consumer_with_task_group_and_result_processor, new_work_queue


@pytest.mark.asyncio
async def test_concurrency_limit():
    """The consumer never runs more than max_concurrent coroutines at once"""
    queue = new_work_queue()
    concurrent_count = 0
    max_concurrent_reached = 0

    async def mock_coroutine(item):
        nonlocal concurrent_count, max_concurrent_reached
        concurrent_count += 1
        max_concurrent_reached = max(max_concurrent_reached, concurrent_count)
        await asyncio.sleep(0.05)
        concurrent_count -= 1
        return item

    for i in range(15):
        queue.sync_q.put(i)
    queue.sync_q.put(None)

    await async_consumer_with_task_group_and_result_processor(
        queue, mock_coroutine, AsyncMock(), timeout_seconds=1.0, max_concurrent=5
    )

    assert max_concurrent_reached == 5


@pytest.mark.asyncio
async def test_every_item_is_processed_when_the_limit_is_reached():
    """Items over the limit wait for a slot instead of being dropped"""
    queue = new_work_queue()

    async def slow_coroutine(item):
        await asyncio.sleep(0.02)
        return item * 2

    for i in range(20):
        queue.sync_q.put(i)
    queue.sync_q.put(None)
    result_processor = AsyncMock()

    await async_consumer_with_task_group_and_result_processor(
        queue, slow_coroutine, result_processor, timeout_seconds=1.0, max_concurrent=2
    )

    expected_results = [2 * i for i in range(20)]
    result_processor.assert_called_once_with(expected_results)


@pytest.mark.asyncio
async def test_results_keep_submission_order():
    """Later items that finish first do not reorder the results"""
    queue = new_work_queue()

    async def uneven_coroutine(item):
        await asyncio.sleep(0.05 if item == 0 else 0.0)
        return item

    for i in range(4):
        queue.sync_q.put(i)
    queue.sync_q.put(None)
    result_processor = AsyncMock()

    await async_consumer_with_task_group_and_result_processor(
        queue, uneven_coroutine, result_processor, timeout_seconds=1.0, max_concurrent=4
    )

    result_processor.assert_called_once_with([0, 1, 2, 3])


@pytest.mark.asyncio
async def test_inactivity_timeout_stops_consumer():
    """Without a shutdown signal the consumer stops after the inactivity timeout"""
    queue = new_work_queue()
    queue.sync_q.put("only_item")
    result_processor = AsyncMock()

    await async_consumer_with_task_group_and_result_processor(
        queue, AsyncMock(return_value="done"), result_processor, timeout_seconds=0.1, max_concurrent=1
    )

    result_processor.assert_called_once_with(["done"])
