"""Password hashing and session tokens."""

from __future__ import annotations

import hashlib
import hmac
import secrets

ALGORITHM = "pbkdf2-sha256"
ITERATIONS = 50_000
TOKEN_TTL_SECONDS = 24 * 3600


def hash_password(password: str, salt: bytes | None = None, iterations: int = ITERATIONS) -> dict:
    salt = salt if salt is not None else secrets.token_bytes(16)
    digest = hashlib.pbkdf2_hmac("sha256", password.encode(), salt, iterations)
    return {
        "algorithm": ALGORITHM,
        "salt": salt.hex(),
        "iterations": iterations,
        "digest": digest.hex(),
    }


def verify_password(password: str, record: dict) -> bool:
    digest = hashlib.pbkdf2_hmac(
        "sha256", password.encode(), bytes.fromhex(record["salt"]), record["iterations"]
    )
    return hmac.compare_digest(digest.hex(), record["digest"])


# fixed record used to equalize timing when the username is unknown
DUMMY_RECORD = hash_password("!", salt=b"\x00" * 16)


def new_token() -> str:
    return secrets.token_hex(16)
