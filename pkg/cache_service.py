import asyncio
import hashlib
import json
import logging
from datetime import datetime, timedelta
from pathlib import Path
from typing import Any, Optional, Union

import aiosqlite
import numpy as np

from models import CoderPool

logger = logging.getLogger(__name__)


def pool_key(**determinants: Any) -> str:
    """Ключ пула: sha256 от всего, что определяет его содержимое."""
    payload = json.dumps(determinants, sort_keys=True, default=str)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class PoolCache:
    """Пулы кодеров в SQLite, чтобы свип по размеру кодбука не пересчитывал SEBO."""

    def __init__(self, db_path: Union[str, Path]):
        self._db_path = Path(db_path)
        self._db: Optional[aiosqlite.Connection] = None
        self._lock = asyncio.Lock()

    async def __aenter__(self) -> "PoolCache":
        await self.initialize()
        return self

    async def __aexit__(self, *exc) -> None:
        await self.close()

    async def initialize(self):
        self._db_path.parent.mkdir(parents=True, exist_ok=True)
        self._db = await aiosqlite.connect(self._db_path)
        await self._db.execute("""
            CREATE TABLE IF NOT EXISTS coder_pools (
                key TEXT PRIMARY KEY,
                q INTEGER NOT NULL,
                entries TEXT NOT NULL,
                expires_at TIMESTAMP
            )
        """)
        await self._db.commit()
        await self.purge_expired()
        logger.info(f"Pool cache initialized at {self._db_path}")

    async def close(self):
        if self._db:
            await self._db.close()
            self._db = None

    async def get_pool(self, key: str) -> Optional[CoderPool]:
        if not self._db: return None
        try:
            async with self._lock:
                cursor = await self._db.execute(
                    "SELECT q, entries, expires_at FROM coder_pools WHERE key = ?", (key,))
                row = await cursor.fetchone()
            if row is None:
                return None
            q, entries, expires_at = row
            if expires_at is not None and datetime.fromisoformat(expires_at) <= datetime.now():
                await self.delete(key)
                return None
            bits = json.loads(entries)
            pool = CoderPool(np.array([[int(c) for c in s] for s in bits], dtype=np.uint8).reshape(len(bits), q))
            logger.info(f"♻️ Coder pool {key[:12]} loaded from cache (L={pool.size})")
            return pool
        except (json.JSONDecodeError, ValueError) as e:
            logger.warning(f"⚠️ Corrupt cached pool {key[:12]} dropped: {e}")
            await self.delete(key)
            return None
        except Exception as e:
            logger.error(f"Pool cache get error for {key[:12]}: {e}")
            return None

    async def put_pool(self, key: str, pool: CoderPool, ttl: Optional[int] = None) -> bool:
        if not self._db: return False
        try:
            bits = ["".join(str(int(v)) for v in row) for row in pool.entries]
            expires_at = (datetime.now() + timedelta(seconds=ttl)).isoformat() if ttl else None
            async with self._lock:
                await self._db.execute(
                    "INSERT OR REPLACE INTO coder_pools (key, q, entries, expires_at) VALUES (?, ?, ?, ?)",
                    (key, pool.q, json.dumps(bits), expires_at),
                )
                await self._db.commit()
            return True
        except Exception as e:
            logger.error(f"Pool cache set error for {key[:12]}: {e}")
            return False

    async def delete(self, key: str) -> bool:
        if not self._db:
            return False
        try:
            async with self._lock:
                await self._db.execute("DELETE FROM coder_pools WHERE key = ?", (key,))
                await self._db.commit()
            return True
        except Exception as e:
            logger.error(f"Pool cache delete error for {key[:12]}: {e}")
            return False

    async def purge_expired(self) -> bool:
        if not self._db:
            return False
        try:
            async with self._lock:
                await self._db.execute(
                    "DELETE FROM coder_pools WHERE expires_at IS NOT NULL AND expires_at <= ?",
                    (datetime.now().isoformat(),))
                await self._db.commit()
            return True
        except Exception as e:
            logger.error(f"Pool cache expiration cleanup error: {e}")
            return False
