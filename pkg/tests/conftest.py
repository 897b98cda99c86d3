from __future__ import annotations

import pytest

from tokengraphs.ingest import BlockWindow, TransferEvent

WINDOW = BlockWindow(18_000_000, 18_100_000)


def make_event(
    from_addr: str = "0xaa",
    to_addr: str = "0xbb",
    value: int = 1,
    block: int = 18_000_000,
    log_index: int = 0,
    token: str = "0x01",
    tx: int = 0,
) -> TransferEvent:
    """Compact event builder: short address stubs are zero-padded."""
    pad = lambda a: "0x" + a[2:].rjust(40, "0")
    return TransferEvent(
        token=pad(token),
        from_addr=pad(from_addr),
        to_addr=pad(to_addr),
        value=value,
        block=block,
        log_index=log_index,
        tx_hash="0x" + format(tx if tx else block * 1000 + log_index, "064x"),
    )


@pytest.fixture
def window() -> BlockWindow:
    return WINDOW
