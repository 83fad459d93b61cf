"""Append-only hash-chain trust log.

Every evidence item and assessment result is recorded as a signed digest
entry: the log never sees raw content, only canonical SHA-256 digests, so
integrity stays checkable without disclosing what was collected.  Entries
link through ``prev_entry_hash``, making any later mutation of a stored
entry detectable by recomputation.

Entry layout (all digests lowercase hex SHA-256):

    seq              dense, strictly increasing from 0
    subject_kind     "evidence" | "assessment_result"
    subject_id       id of the hashed record
    subject_digest   canonical digest of the record
    source_id        extractor or orchestrator identity
    algorithm        signature scheme id ("ed25519")
    signature        detached signature over (seq, subject_digest, prev_entry_hash)
    prev_entry_hash  previous entry's entry_hash; all-zero for seq 0
    entry_hash       digest of the canonical entry without this field
    recorded_at      engine-clock timestamp
"""

from __future__ import annotations

import base64
import hashlib
import threading
from dataclasses import dataclass
from datetime import datetime
from typing import Any

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

from .canonical import canonical_bytes
from .canonical import canonical_digest as _canonical_digest
from .clock import format_ts
from .errors import BadSignature, NonSerializable, UnknownSource
from .journal import JsonlJournal, NullJournal

GENESIS_HASH = "0" * 64

KIND_EVIDENCE = "evidence"
KIND_ASSESSMENT_RESULT = "assessment_result"

STATUS_INTACT = "intact"
STATUS_TAMPERED = "tampered"

RECORDED_INTACT = "recorded_intact"
UNKNOWN = "unknown"
DIGEST_MISMATCH = "digest_mismatch"

ALGORITHM_ED25519 = "ed25519"


def canonical_digest(subject: Any) -> str:
    """SHA-256 hex digest over the subject's canonical serialization."""
    return _canonical_digest(subject)


def signing_payload(seq: int, subject_digest: str, prev_entry_hash: str) -> bytes:
    return canonical_bytes(
        {"prev_entry_hash": prev_entry_hash, "seq": seq, "subject_digest": subject_digest}
    )


@dataclass(frozen=True)
class LogEntry:
    seq: int
    subject_kind: str
    subject_id: str
    subject_digest: str
    source_id: str
    algorithm: str
    signature: str
    prev_entry_hash: str
    entry_hash: str
    recorded_at: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "seq": self.seq,
            "subject_kind": self.subject_kind,
            "subject_id": self.subject_id,
            "subject_digest": self.subject_digest,
            "source_id": self.source_id,
            "algorithm": self.algorithm,
            "signature": self.signature,
            "prev_entry_hash": self.prev_entry_hash,
            "entry_hash": self.entry_hash,
            "recorded_at": self.recorded_at,
        }

    def body_dict(self) -> dict[str, Any]:
        body = self.to_dict()
        body.pop("entry_hash")
        return body


def entry_from_dict(doc: dict[str, Any]) -> LogEntry:
    return LogEntry(**{k: doc[k] for k in LogEntry.__dataclass_fields__})


def compute_entry_hash(body: dict[str, Any]) -> str:
    return hashlib.sha256(canonical_bytes(body)).hexdigest()


@dataclass(frozen=True)
class VerificationReport:
    status: str
    first_bad_seq: int | None
    length: int

    @property
    def intact(self) -> bool:
        return self.status == STATUS_INTACT

    def to_dict(self) -> dict[str, Any]:
        return {"status": self.status, "first_bad_seq": self.first_bad_seq, "length": self.length}


class SourceKey:
    """Signing identity of one evidence source (or the orchestrator)."""

    def __init__(self, source_id: str, private_key: Ed25519PrivateKey):
        self.source_id = source_id
        self._private = private_key

    @classmethod
    def generate(cls, source_id: str) -> "SourceKey":
        return cls(source_id, Ed25519PrivateKey.generate())

    @classmethod
    def from_bytes(cls, source_id: str, raw: bytes) -> "SourceKey":
        return cls(source_id, Ed25519PrivateKey.from_private_bytes(raw))

    def private_bytes(self) -> bytes:
        from cryptography.hazmat.primitives.serialization import (
            Encoding,
            NoEncryption,
            PrivateFormat,
        )

        return self._private.private_bytes(Encoding.Raw, PrivateFormat.Raw, NoEncryption())

    def public_bytes(self) -> bytes:
        from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat

        return self._private.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)

    def sign(self, payload: bytes) -> str:
        return base64.b64encode(self._private.sign(payload)).decode("ascii")


class Keyring:
    """Registered source public keys; verification results are memoized."""

    def __init__(self):
        self._keys: dict[str, Ed25519PublicKey] = {}
        self._verified: dict[tuple[str, bytes, str], bool] = {}

    def register(self, source_id: str, public_key: bytes | str) -> None:
        if isinstance(public_key, str):
            public_key = base64.b64decode(public_key)
        self._keys[source_id] = Ed25519PublicKey.from_public_bytes(public_key)

    def register_source(self, key: SourceKey) -> None:
        self.register(key.source_id, key.public_bytes())

    def sources(self) -> list[str]:
        return sorted(self._keys)

    def has(self, source_id: str) -> bool:
        return source_id in self._keys

    def public_key_b64(self, source_id: str) -> str:
        from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat

        key = self._keys[source_id]
        return base64.b64encode(key.public_bytes(Encoding.Raw, PublicFormat.Raw)).decode("ascii")

    def verify(self, source_id: str, payload: bytes, signature_b64: str) -> bool:
        if source_id not in self._keys:
            return False
        memo_key = (source_id, payload, signature_b64)
        cached = self._verified.get(memo_key)
        if cached is not None:
            return cached
        try:
            self._keys[source_id].verify(base64.b64decode(signature_b64), payload)
            ok = True
        except (InvalidSignature, ValueError):
            ok = False
        self._verified[memo_key] = ok
        return ok

    def to_dict(self) -> dict[str, Any]:
        return {source: {"algorithm": ALGORITHM_ED25519, "public_key": self.public_key_b64(source)} for source in self._keys}

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "Keyring":
        ring = cls()
        for source_id, entry in doc.items():
            ring.register(source_id, entry["public_key"])
        return ring


class TrustLog:
    """The append-only chain itself; appends serialized, reads concurrent."""

    def __init__(self, keyring: Keyring, journal: JsonlJournal | None = None):
        self.keyring = keyring
        self._entries: list[LogEntry] = []
        self._lock = threading.RLock()
        self._journal = journal if journal is not None else NullJournal()
        for record in self._journal:
            self._entries.append(entry_from_dict(record))

    def __len__(self) -> int:
        return len(self._entries)

    def entries(self, start: int = 0) -> list[LogEntry]:
        return list(self._entries[start:])

    def head_hash(self) -> str:
        return self._entries[-1].entry_hash if self._entries else GENESIS_HASH

    def append_entry(
        self,
        subject_kind: str,
        subject_id: str,
        digest: str,
        source_id: str,
        signature: str,
        now: datetime,
    ) -> LogEntry:
        """Append a pre-signed digest entry (the direct recording path).

        The signature must verify against the source's registered key for
        the chain position the entry will occupy.
        """
        with self._lock:
            if not self.keyring.has(source_id):
                raise UnknownSource(f"source {source_id!r} has no key in the keyring")
            seq = len(self._entries)
            prev = self.head_hash()
            if not self.keyring.verify(source_id, signing_payload(seq, digest, prev), signature):
                raise BadSignature(f"signature from {source_id!r} does not verify for seq {seq}")
            body = {
                "seq": seq,
                "subject_kind": subject_kind,
                "subject_id": subject_id,
                "subject_digest": digest,
                "source_id": source_id,
                "algorithm": ALGORITHM_ED25519,
                "signature": signature,
                "prev_entry_hash": prev,
                "recorded_at": format_ts(now),
            }
            entry = entry_from_dict({**body, "entry_hash": compute_entry_hash(body)})
            self._entries.append(entry)
            self._journal.append(entry.to_dict())
            return entry

    def record_subject(
        self,
        subject_kind: str,
        subject: dict[str, Any],
        key: SourceKey,
        now: datetime,
    ) -> LogEntry:
        """Digest, sign and append in one step (the via-evidence-store path).

        Produces entries byte-identical to the direct path for identical
        inputs: the digest, signing payload and chain position fully
        determine the entry.
        """
        digest = canonical_digest(subject)
        subject_id = subject.get("id")
        if not isinstance(subject_id, str) or not subject_id:
            raise NonSerializable("subject record needs a string 'id' for the trust log")
        with self._lock:
            seq = len(self._entries)
            signature = key.sign(signing_payload(seq, digest, self.head_hash()))
            return self.append_entry(subject_kind, subject_id, digest, key.source_id, signature, now)

    # --- verification ---------------------------------------------------------

    def verify_chain(self) -> VerificationReport:
        """Recompute every hash, link and signature; report the first failure."""
        first_bad = self._first_bad_seq()
        if first_bad is None:
            return VerificationReport(status=STATUS_INTACT, first_bad_seq=None, length=len(self._entries))
        return VerificationReport(status=STATUS_TAMPERED, first_bad_seq=first_bad, length=len(self._entries))

    def _first_bad_seq(self) -> int | None:
        prev = GENESIS_HASH
        for index, entry in enumerate(self._entries):
            if entry.seq != index or entry.prev_entry_hash != prev:
                return index
            if compute_entry_hash(entry.body_dict()) != entry.entry_hash:
                return index
            if entry.algorithm != ALGORITHM_ED25519:
                return index
            payload = signing_payload(entry.seq, entry.subject_digest, entry.prev_entry_hash)
            if not self.keyring.verify(entry.source_id, payload, entry.signature):
                return index
            prev = entry.entry_hash
        return None

    def check_subject(self, subject: dict[str, Any], subject_kind: str | None = None) -> str:
        """Was this exact record registered, and does it still match?

        Only the intact prefix of the chain is consulted; a record whose id
        is known but whose digest differs was manipulated somewhere.
        """
        digest = canonical_digest(subject)
        subject_id = subject.get("id")
        first_bad = self._first_bad_seq()
        intact = self._entries if first_bad is None else self._entries[:first_bad]
        saw_id = False
        for entry in intact:
            if subject_kind is not None and entry.subject_kind != subject_kind:
                continue
            if entry.subject_digest == digest:
                return RECORDED_INTACT
            if subject_id is not None and entry.subject_id == subject_id:
                saw_id = True
        return DIGEST_MISMATCH if saw_id else UNKNOWN
