from __future__ import annotations

import sys
from pathlib import Path

from coshare.ingest import Message, Snapshot

FIXTURE_DIR = Path(__file__).parent / "data"

sys.path.insert(0, str(Path(__file__).parent))


def msg(
    msg_id: str,
    user: str = "u1",
    group: str = "g1",
    ts: int = 0,
    media: str = "text",
    text: str | None = None,
    fingerprint: str | None = None,
    matrix_ref: str | None = None,
    transfer_id: str | None = None,
) -> Message:
    if media == "text" and text is None:
        text = "x" * 200
    if media in ("audio", "video") and transfer_id is None:
        transfer_id = f"t-{msg_id}"
    return Message(
        msg_id=msg_id,
        timestamp=ts,
        user_id=user,
        group_id=group,
        media_type=media,
        text_body=text,
        image_fingerprint=fingerprint,
        matrix_ref=matrix_ref,
        transfer_id=transfer_id,
    )


def snap(messages, window_index: int = 1, start: int = 0, end: int = 10**9) -> Snapshot:
    return Snapshot(
        window_index=window_index,
        start=start,
        end=end,
        messages=tuple(sorted(messages, key=Message.sort_key)),
    )
