import asyncio

import aiosqlite
import numpy as np

from cache_service import PoolCache, pool_key
from models import CoderPool

POOL = CoderPool(np.array([[0, 1, 1, 0], [1, 1, 1, 1], [0, 0, 0, 1]]))


def test_pool_key_ignores_argument_order():
    a = pool_key(q=4, m=2, sebo={"rounds": 20, "block_size": 10})
    b = pool_key(sebo={"block_size": 10, "rounds": 20}, m=2, q=4)
    assert a == b
    assert pool_key(q=4, m=3) != pool_key(q=4, m=2)
    assert len(a) == 64


def test_put_and_get_round_trip(tmp_path):
    async def scenario():
        async with PoolCache(tmp_path / "nested" / "cache.db") as cache:
            assert await cache.get_pool("missing") is None
            assert await cache.put_pool("k", POOL)
            return await cache.get_pool("k")

    loaded = asyncio.run(scenario())
    assert loaded is not None
    assert np.array_equal(loaded.entries, POOL.entries)


def test_pool_survives_reopen(tmp_path):
    path = tmp_path / "cache.db"

    async def scenario():
        async with PoolCache(path) as cache:
            await cache.put_pool("k", POOL)
        async with PoolCache(path) as cache:
            return await cache.get_pool("k")

    assert np.array_equal(asyncio.run(scenario()).entries, POOL.entries)


def test_expired_pool_is_gone(tmp_path):
    async def scenario():
        async with PoolCache(tmp_path / "cache.db") as cache:
            await cache.put_pool("old", POOL, ttl=-1)
            await cache.put_pool("fresh", POOL, ttl=3600)
            return await cache.get_pool("old"), await cache.get_pool("fresh")

    old, fresh = asyncio.run(scenario())
    assert old is None
    assert fresh is not None


def test_corrupt_row_is_dropped(tmp_path, caplog):
    path = tmp_path / "cache.db"

    async def scenario():
        async with PoolCache(path) as cache:
            await cache.put_pool("k", POOL)
            async with aiosqlite.connect(path) as db:
                await db.execute("UPDATE coder_pools SET entries = ? WHERE key = ?", ("{not json", "k"))
                await db.commit()
            first = await cache.get_pool("k")
            async with aiosqlite.connect(path) as db:
                cursor = await db.execute("SELECT COUNT(*) FROM coder_pools")
                (count,) = await cursor.fetchone()
            return first, count

    first, count = asyncio.run(scenario())
    assert first is None
    assert count == 0
    assert "Corrupt cached pool" in caplog.text


def test_closed_cache_is_inert(tmp_path):
    async def scenario():
        cache = PoolCache(tmp_path / "cache.db")
        return await cache.get_pool("k"), await cache.put_pool("k", POOL), await cache.delete("k")

    assert asyncio.run(scenario()) == (None, False, False)
