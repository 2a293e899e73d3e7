"""Binary cache files for prime eigenvalue tables.

Layout, all little-endian: magic "HSGN", format version u16, form kind u8,
weight u16, limit u64, then one record per prime ascending: p u64, lambda_p
f64, has_exact u8, and when has_exact is 1 a u32 byte count followed by the
signed little-endian integer a_p. The file ends with a 64-bit blake2b digest
of everything before it.
"""

from __future__ import annotations

import hashlib
import os
import struct

import numpy as np

from .coeffs import FormSpec, PrimeEigenvalueTable
from .errors import CacheError

MAGIC = b"HSGN"
VERSION = 1

_KIND_TO_TAG = {"Delta": 1, "CMCurve": 2, "SatoTateSynthetic": 3, "VanishingModel": 4}
_TAG_TO_KIND = {v: k for k, v in _KIND_TO_TAG.items()}

_HEADER = struct.Struct("<4sHBHQ")
_RECORD = struct.Struct("<QdB")
_PLAIN_DT = np.dtype([("p", "<u8"), ("lam", "<f8"), ("he", "u1")])


def _checksum(payload: bytes) -> bytes:
    return hashlib.blake2b(payload, digest_size=8).digest()


def write_table(path: str, table: PrimeEigenvalueTable) -> None:
    """Write the table atomically; the trailing digest seals the payload."""
    parts = [
        _HEADER.pack(
            MAGIC, VERSION, _KIND_TO_TAG[table.form.kind], table.form.weight, table.limit
        )
    ]
    exact = table.exact
    if not exact:
        rec = np.empty(table.primes.size, dtype=_PLAIN_DT)
        rec["p"] = table.primes
        rec["lam"] = table.lam
        rec["he"] = 0
        parts.append(rec.tobytes())
    else:
        for i in range(table.primes.size):
            p = int(table.primes[i])
            ap = exact.get(p)
            if ap is None:
                parts.append(_RECORD.pack(p, float(table.lam[i]), 0))
            else:
                raw = ap.to_bytes((ap.bit_length() + 8) // 8, "little", signed=True)
                parts.append(_RECORD.pack(p, float(table.lam[i]), 1))
                parts.append(struct.pack("<I", len(raw)))
                parts.append(raw)
    payload = b"".join(parts)
    blob = payload + _checksum(payload)
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(blob)
    os.replace(tmp, path)


def _parse_records(buf: bytes, pos: int, end: int):
    """Parse records in [pos, end), switching to a bulk path on plain tails."""
    scalar_p, scalar_l = [], []
    bulk_p = bulk_l = None
    exact = {}
    while pos < end:
        # When the whole remainder is plain 17-byte records, parse in bulk.
        # The one-byte pre-check keeps the probe O(1) inside exact runs.
        rem = end - pos
        if rem % _RECORD.size == 0 and buf[pos + 16] == 0:
            arr = np.frombuffer(buf, dtype=_PLAIN_DT, count=rem // _RECORD.size, offset=pos)
            if not arr["he"].any():
                bulk_p = arr["p"].astype(np.int64)
                bulk_l = arr["lam"].astype(np.float64)
                pos = end
                break
        if pos + _RECORD.size > end:
            raise CacheError("truncated record")
        p, lam, he = _RECORD.unpack_from(buf, pos)
        pos += _RECORD.size
        if he not in (0, 1):
            raise CacheError(f"bad has_exact byte {he}")
        if he:
            if pos + 4 > end:
                raise CacheError("truncated exact length")
            (nbytes,) = struct.unpack_from("<I", buf, pos)
            pos += 4
            if pos + nbytes > end:
                raise CacheError("truncated exact value")
            exact[int(p)] = int.from_bytes(buf[pos : pos + nbytes], "little", signed=True)
            pos += nbytes
        scalar_p.append(int(p))
        scalar_l.append(float(lam))
    primes = np.array(scalar_p, dtype=np.int64)
    lam = np.array(scalar_l, dtype=np.float64)
    if bulk_p is not None:
        primes = np.concatenate([primes, bulk_p])
        lam = np.concatenate([lam, bulk_l])
    return primes, lam, exact


def read_table(path: str) -> PrimeEigenvalueTable:
    """Load and verify a cache file."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size + 8:
        raise CacheError(f"{path}: file too short")
    payload, digest = blob[:-8], blob[-8:]
    if _checksum(payload) != digest:
        raise CacheError(f"{path}: checksum mismatch")
    magic, version, tag, weight, limit = _HEADER.unpack_from(payload, 0)
    if magic != MAGIC:
        raise CacheError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise CacheError(f"{path}: unsupported version {version}")
    kind = _TAG_TO_KIND.get(tag)
    if kind is None:
        raise CacheError(f"{path}: unknown form kind tag {tag}")
    primes, lam, exact = _parse_records(payload, _HEADER.size, len(payload))
    sgn = np.sign(lam).astype(np.int8)
    for i, p in enumerate(primes.tolist()):
        ap = exact.get(p)
        if ap is not None:
            sgn[i] = 0 if ap == 0 else (1 if ap > 0 else -1)
            if ap == 0:
                lam[i] = 0.0
    form = FormSpec(kind, weight)
    try:
        return PrimeEigenvalueTable(form, int(limit), primes, lam, sgn, exact)
    except ValueError as exc:
        raise CacheError(f"{path}: {exc}") from exc


def probe(path: str, form: FormSpec, limit: int) -> bool:
    """True when path holds a valid cache for exactly this form and limit."""
    if not os.path.exists(path):
        return False
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
        if len(blob) < _HEADER.size + 8 or _checksum(blob[:-8]) != blob[-8:]:
            return False
        magic, version, tag, weight, lim = _HEADER.unpack_from(blob, 0)
        return (
            magic == MAGIC
            and version == VERSION
            and _TAG_TO_KIND.get(tag) == form.kind
            and weight == form.weight
            and lim == limit
        )
    except OSError:
        return False
