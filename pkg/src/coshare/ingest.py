"""Message log parsing, time windowing and per-window activity statistics."""

from __future__ import annotations

import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable

MEDIA_TYPES = ("text", "image", "audio", "video")

# Field names of one line-delimited message record (the wire format).
RECORD_FIELDS = (
    "msg_id",
    "timestamp",
    "user",
    "group",
    "media",
    "text",
    "fingerprint",
    "matrix_ref",
    "transfer_id",
)

_HEX = set("0123456789abcdef")


class CorpusError(ValueError):
    """Raised in strict mode on the first rejected input line."""


@dataclass(frozen=True, slots=True)
class Message:
    """One anonymized log record."""

    msg_id: str
    timestamp: int
    user_id: str
    group_id: str
    media_type: str
    text_body: str | None = None
    image_fingerprint: str | None = None
    matrix_ref: str | None = None
    transfer_id: str | None = None

    def sort_key(self) -> tuple[int, str]:
        return (self.timestamp, self.msg_id)


@dataclass(frozen=True, slots=True)
class Rejection:
    line_no: int
    reason: str


@dataclass
class ParseReport:
    n_lines: int = 0
    n_parsed: int = 0
    rejections: list[Rejection] = field(default_factory=list)


@dataclass(frozen=True, slots=True)
class Snapshot:
    """All messages of one fixed-length window, ordered by (timestamp, msg_id)."""

    window_index: int
    start: int
    end: int
    messages: tuple[Message, ...]


@dataclass
class WindowReport:
    n_input: int
    n_assigned: int
    n_dropped_before: int
    n_dropped_after: int


@dataclass(frozen=True)
class SnapshotStats:
    n_active_users: int
    avg_users_per_group: float
    avg_msgs_per_group: float
    avg_msgs_per_user_in_group: float
    msgs_by_media: dict[str, int]


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def _nonempty_str(x) -> bool:
    return isinstance(x, str) and len(x) > 0


def _check_record(rec: dict) -> str | None:
    """Return a rejection reason, or None when the record is valid."""
    if not isinstance(rec, dict):
        return "record is not an object"
    if not _nonempty_str(rec.get("msg_id")):
        return "missing or empty msg_id"
    if not _is_int(rec.get("timestamp")):
        return "timestamp must be an integer"
    if rec["timestamp"] < 0:
        return "timestamp must be >= 0"
    if not _nonempty_str(rec.get("user")):
        return "missing or empty user"
    if not _nonempty_str(rec.get("group")):
        return "missing or empty group"
    media = rec.get("media")
    if media not in MEDIA_TYPES:
        return f"media must be one of {'/'.join(MEDIA_TYPES)}"
    if media == "text":
        if not isinstance(rec.get("text"), str):
            return "text message requires a text field"
    elif media == "image":
        fp = rec.get("fingerprint")
        if fp is None:
            if not _nonempty_str(rec.get("matrix_ref")):
                return "image message requires fingerprint or matrix_ref"
        else:
            if not (isinstance(fp, str) and len(fp) == 16 and set(fp.lower()) <= _HEX):
                return "fingerprint must be a 16-digit hex string"
    else:
        if not _nonempty_str(rec.get("transfer_id")):
            return f"{media} message requires transfer_id"
    return None


def message_from_record(rec: dict) -> Message:
    fp = rec.get("fingerprint")
    return Message(
        msg_id=rec["msg_id"],
        timestamp=rec["timestamp"],
        user_id=rec["user"],
        group_id=rec["group"],
        media_type=rec["media"],
        text_body=rec.get("text") if rec["media"] == "text" else None,
        image_fingerprint=fp.lower() if isinstance(fp, str) else None,
        matrix_ref=rec.get("matrix_ref") if rec["media"] == "image" else None,
        transfer_id=rec.get("transfer_id") if rec["media"] in ("audio", "video") else None,
    )


def message_to_record(msg: Message) -> dict:
    rec: dict = {
        "msg_id": msg.msg_id,
        "timestamp": msg.timestamp,
        "user": msg.user_id,
        "group": msg.group_id,
        "media": msg.media_type,
    }
    if msg.text_body is not None:
        rec["text"] = msg.text_body
    if msg.image_fingerprint is not None:
        rec["fingerprint"] = msg.image_fingerprint
    if msg.matrix_ref is not None:
        rec["matrix_ref"] = msg.matrix_ref
    if msg.transfer_id is not None:
        rec["transfer_id"] = msg.transfer_id
    return rec


def parse_corpus(lines: Iterable[str], strict: bool = False) -> tuple[list[Message], ParseReport]:
    """Parse line-delimited message records in input order.

    Invalid lines are recorded in the report and skipped; in strict mode the
    first invalid line raises CorpusError. Blank lines are ignored.
    """
    messages: list[Message] = []
    report = ParseReport()
    seen_ids: set[str] = set()
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        report.n_lines += 1
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            _reject(report, line_no, f"invalid json: {exc.msg}", strict)
            continue
        reason = _check_record(rec)
        if reason is None and rec["msg_id"] in seen_ids:
            reason = "duplicate msg_id"
        if reason is not None:
            _reject(report, line_no, reason, strict)
            continue
        msg = message_from_record(rec)
        seen_ids.add(msg.msg_id)
        messages.append(msg)
        report.n_parsed += 1
    return messages, report


def _reject(report: ParseReport, line_no: int, reason: str, strict: bool) -> None:
    if strict:
        raise CorpusError(f"line {line_no}: {reason}")
    report.rejections.append(Rejection(line_no, reason))


def window_messages(
    messages: Iterable[Message],
    origin: int,
    window_len: int,
    n_windows: int,
) -> tuple[list[Snapshot], WindowReport]:
    """Slice messages into n_windows half-open windows [start, end).

    Messages outside [origin, origin + n_windows * window_len) are dropped
    and counted in the report.
    """
    if window_len <= 0:
        raise ValueError("window_len must be > 0")
    if n_windows < 1:
        raise ValueError("n_windows must be >= 1")
    horizon = origin + n_windows * window_len
    buckets: list[list[Message]] = [[] for _ in range(n_windows)]
    n_input = 0
    dropped_before = dropped_after = 0
    for msg in messages:
        n_input += 1
        if msg.timestamp < origin:
            dropped_before += 1
        elif msg.timestamp >= horizon:
            dropped_after += 1
        else:
            buckets[(msg.timestamp - origin) // window_len].append(msg)
    snapshots = [
        Snapshot(
            window_index=i + 1,
            start=origin + i * window_len,
            end=origin + (i + 1) * window_len,
            messages=tuple(sorted(bucket, key=Message.sort_key)),
        )
        for i, bucket in enumerate(buckets)
    ]
    report = WindowReport(
        n_input=n_input,
        n_assigned=n_input - dropped_before - dropped_after,
        n_dropped_before=dropped_before,
        n_dropped_after=dropped_after,
    )
    return snapshots, report


def filter_short_texts(snapshot: Snapshot, min_chars: int = 180) -> Snapshot:
    """Drop text messages shorter than min_chars code points; keep the rest.

    Non-text messages are never touched. Returns a new Snapshot.
    """
    if min_chars < 0:
        raise ValueError("min_chars must be >= 0")
    kept = tuple(
        m
        for m in snapshot.messages
        if m.media_type != "text" or len(m.text_body or "") >= min_chars
    )
    return Snapshot(snapshot.window_index, snapshot.start, snapshot.end, kept)


def activity_stats(snapshot: Snapshot) -> SnapshotStats:
    """Per-window activity summary; all-zero stats for an empty window."""
    by_media = Counter(m.media_type for m in snapshot.messages)
    users: set[str] = set()
    group_users: dict[str, set[str]] = defaultdict(set)
    group_msgs: Counter[str] = Counter()
    user_group_msgs: Counter[tuple[str, str]] = Counter()
    for m in snapshot.messages:
        users.add(m.user_id)
        group_users[m.group_id].add(m.user_id)
        group_msgs[m.group_id] += 1
        user_group_msgs[(m.user_id, m.group_id)] += 1
    n_groups = len(group_msgs)
    return SnapshotStats(
        n_active_users=len(users),
        avg_users_per_group=(
            sum(len(s) for s in group_users.values()) / n_groups if n_groups else 0.0
        ),
        avg_msgs_per_group=(sum(group_msgs.values()) / n_groups if n_groups else 0.0),
        avg_msgs_per_user_in_group=(
            sum(user_group_msgs.values()) / len(user_group_msgs) if user_group_msgs else 0.0
        ),
        msgs_by_media={m: by_media.get(m, 0) for m in MEDIA_TYPES},
    )
