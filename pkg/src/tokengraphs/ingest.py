"""Fetching, filtering, decoding and windowing of ERC-20 Transfer logs.

The pipeline entry point: raw logs come either from an Ethereum JSON-RPC
endpoint (``fetch_logs``) or from a local tab-separated fixture file
(``read_fixture``), and leave as streams of decoded :class:`TransferEvent`
grouped into fixed-width block windows.
"""

from __future__ import annotations

import logging
import os
import re
import time
from dataclasses import dataclass
from operator import attrgetter
from typing import Callable, Iterable, Iterator, NamedTuple

import requests

from .keccak import keccak_256

log = logging.getLogger(__name__)

TRANSFER_SIGNATURE = "Transfer(address,address,uint256)"

ENDPOINT_ENV_VAR = "ETH_RPC_URL"

UINT256_MAX = (1 << 256) - 1

_ADDRESS_RE = re.compile(r"^0x[0-9a-f]{40}$")
_TXHASH_RE = re.compile(r"^0x[0-9a-f]{64}$")

# one anchored pattern for the hot path; failures get a slow, precise diagnosis
_FIXTURE_LINE_RE = re.compile(
    r"(0x[0-9a-f]{40})\t(0x[0-9a-f]{40})\t(0x[0-9a-f]{40})"
    r"\t(\d+)\t(\d+)\t(\d+)\t(0x[0-9a-f]{64})$"
)

# provider messages that mean "narrow the block range", collected from the
# common public endpoints (infura / alchemy / erigon / nethermind wording)
_OVER_LIMIT_RE = re.compile(
    r"more than \d+ results|too many|response size|query timeout exceeded"
    r"|block range|limit exceeded",
    re.IGNORECASE,
)


class DecodeError(ValueError):
    """Raised when a log does not decode to a well-formed transfer."""


class FixtureParseError(ValueError):
    """Malformed fixture line; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class FixtureValueError(FixtureParseError):
    """Fixture field parses but is out of range."""


class FetchError(RuntimeError):
    """Log fetch failed after retries; ``__cause__`` holds the last error."""


class RangeTooDenseError(FetchError):
    """A single block still exceeds the provider's result limit."""


def transfer_topic_hash() -> str:
    """Hex topic identifying ERC-20 Transfer events (keccak of the signature)."""
    return "0x" + keccak_256(TRANSFER_SIGNATURE.encode("ascii")).hex()


_TRANSFER_TOPIC = transfer_topic_hash()


@dataclass(frozen=True)
class RawLog:
    """One undecoded log entry as returned by eth_getLogs."""

    address: str
    topics: tuple[str, ...]
    data: str
    block_number: int
    tx_hash: str
    log_index: int

    @classmethod
    def from_rpc(cls, entry: dict) -> "RawLog":
        return cls(
            address=entry["address"].lower(),
            topics=tuple(t.lower() for t in entry["topics"]),
            data=entry["data"].lower(),
            block_number=_hex_quantity(entry["blockNumber"]),
            tx_hash=entry["transactionHash"].lower(),
            log_index=_hex_quantity(entry["logIndex"]),
        )


class TransferEvent(NamedTuple):
    """One decoded ERC-20 transfer.

    ``value`` is kept in raw token units as an exact (arbitrary precision)
    integer; no decimals adjustment is applied anywhere in the pipeline.
    """

    token: str
    from_addr: str
    to_addr: str
    value: int
    block: int
    log_index: int
    tx_hash: str

    @property
    def order_key(self) -> tuple[int, int]:
        return (self.block, self.log_index)


class BlockWindow(NamedTuple):
    """Half-open block range [start, end)."""

    start: int
    end: int

    @property
    def width(self) -> int:
        return self.end - self.start

    def __str__(self) -> str:
        return f"{self.start}-{self.end}"


DEFAULT_WINDOW_WIDTH = 100_000

_EVENT_ORDER = attrgetter("block", "log_index")


def _hex_quantity(value: str | int) -> int:
    if isinstance(value, int):
        return value
    return int(value, 16)


def is_erc20_transfer(entry: RawLog) -> bool:
    """Shape filter: Transfer topic, exactly 3 topics, exactly 32 data bytes.

    The 3-topic check is what separates ERC-20 from ERC-721, whose Transfer
    event indexes the token id as a fourth topic and carries no data.
    """
    if len(entry.topics) != 3 or entry.topics[0] != _TRANSFER_TOPIC:
        return False
    data = entry.data
    return data.startswith("0x") and len(data) == 2 + 64


def _topic_to_address(topic: str) -> str:
    # indexed address arguments are left-padded to 32 bytes; anything in the
    # high 12 bytes means the topic is not a plain address argument
    if len(topic) != 2 + 64 or topic[2:26] != "0" * 24:
        raise DecodeError(f"topic is not a padded address: {topic}")
    return "0x" + topic[26:]


def decode_transfer(entry: RawLog) -> TransferEvent:
    """Decode a filtered log into a TransferEvent.

    Raises :class:`DecodeError` when called on a log that does not satisfy
    :func:`is_erc20_transfer` or whose address topics are not zero-padded.
    """
    if not is_erc20_transfer(entry):
        raise DecodeError("log does not have the ERC-20 Transfer shape")
    return TransferEvent(
        token=entry.address.lower(),
        from_addr=_topic_to_address(entry.topics[1]),
        to_addr=_topic_to_address(entry.topics[2]),
        value=int(entry.data[2:], 16),
        block=entry.block_number,
        log_index=entry.log_index,
        tx_hash=entry.tx_hash,
    )


def decode_logs(entries: Iterable[RawLog]) -> Iterator[TransferEvent]:
    """Filter and decode a raw log stream, silently dropping non-transfers."""
    for entry in entries:
        if not is_erc20_transfer(entry):
            continue
        try:
            yield decode_transfer(entry)
        except DecodeError:
            log.debug("dropping malformed transfer log %s/%s",
                      entry.tx_hash, entry.log_index)


def _requests_transport(endpoint: str, payload: dict, timeout: float) -> dict:
    response = requests.post(endpoint, json=payload, timeout=timeout)
    response.raise_for_status()
    return response.json()


Transport = Callable[[str, dict, float], dict]


class _RpcClient:
    def __init__(self, endpoint: str, transport: Transport | None,
                 timeout: float, retries: int, backoff_base: float):
        self.endpoint = endpoint
        self.transport = transport or _requests_transport
        self.timeout = timeout
        self.retries = retries
        self.backoff_base = backoff_base
        self._next_id = 1

    def get_logs(self, from_block: int, to_block: int) -> list[dict]:
        """eth_getLogs over the inclusive block range [from_block, to_block]."""
        payload = {
            "jsonrpc": "2.0",
            "id": self._next_id,
            "method": "eth_getLogs",
            "params": [{
                "fromBlock": hex(from_block),
                "toBlock": hex(to_block),
                "topics": [_TRANSFER_TOPIC],
            }],
        }
        self._next_id += 1
        last_error: Exception | None = None
        for attempt in range(self.retries + 1):
            if attempt and self.backoff_base:
                time.sleep(min(self.backoff_base * 2 ** (attempt - 1), 30.0))
            try:
                reply = self.transport(self.endpoint, payload, self.timeout)
            except Exception as exc:  # transport-level: connection, timeout, 5xx
                last_error = exc
                log.warning("eth_getLogs transport error (attempt %d): %s",
                            attempt + 1, exc)
                continue
            error = reply.get("error")
            if error is None:
                return reply["result"]
            message = str(error.get("message", ""))
            if error.get("code") == -32005 or _OVER_LIMIT_RE.search(message):
                raise _OverLimit(message)
            last_error = FetchError(f"provider error: {message}")
            log.warning("eth_getLogs provider error (attempt %d): %s",
                        attempt + 1, message)
        raise FetchError(
            f"eth_getLogs failed after {self.retries + 1} attempts"
        ) from last_error


class _OverLimit(Exception):
    pass


def fetch_logs(
    endpoint: str,
    window: BlockWindow,
    chunk: int = 2_000,
    transport: Transport | None = None,
    timeout: float = 30.0,
    retries: int = 3,
    backoff_base: float = 0.5,
    on_chunk_done: Callable[[int, int], None] | None = None,
) -> Iterator[RawLog]:
    """Stream Transfer-topic logs over ``window``, ordered by (block, logIndex).

    The range is requested in ``chunk``-block slices.  When the provider
    rejects a slice as too large, the slice is halved and re-requested; a
    slice that cannot go below one block raises :class:`RangeTooDenseError`.
    Duplicate logs (same block, txHash, logIndex) from provider retries are
    dropped.  ``on_chunk_done(start, end)`` fires after each top-level chunk,
    which is what makes resumable fetches possible.
    """
    if chunk < 1:
        raise ValueError("chunk must be >= 1 block")
    client = _RpcClient(endpoint, transport, timeout, retries, backoff_base)
    seen: set[tuple[int, str, int]] = set()

    def fetch_span(span_start: int, span_end: int) -> list[RawLog]:
        # spans are half-open; eth_getLogs takes inclusive bounds
        try:
            raw = client.get_logs(span_start, span_end - 1)
        except _OverLimit as exc:
            if span_end - span_start <= 1:
                raise RangeTooDenseError(
                    f"block {span_start} alone exceeds the provider limit: {exc}"
                ) from exc
            mid = (span_start + span_end) // 2
            return fetch_span(span_start, mid) + fetch_span(mid, span_end)
        return [RawLog.from_rpc(entry) for entry in raw]

    for start in range(window.start, window.end, chunk):
        end = min(start + chunk, window.end)
        batch = fetch_span(start, end)
        batch.sort(key=lambda e: (e.block_number, e.log_index))
        for entry in batch:
            key = (entry.block_number, entry.tx_hash, entry.log_index)
            if key in seen:
                continue
            seen.add(key)
            yield entry
        if on_chunk_done is not None:
            on_chunk_done(start, end)


# ---------------------------------------------------------------------------
# fixture file format: one transfer per line, tab separated
#   token  from  to  value  block  logIndex  txHash

def format_fixture_line(event: TransferEvent) -> str:
    return (f"{event.token}\t{event.from_addr}\t{event.to_addr}\t{event.value}"
            f"\t{event.block}\t{event.log_index}\t{event.tx_hash}")


def _diagnose_fixture_line(line_no: int, line: str) -> FixtureParseError:
    fields = line.split("\t")
    if len(fields) != 7:
        return FixtureParseError(line_no, f"expected 7 fields, got {len(fields)}")
    token, from_addr, to_addr, value_s, block_s, index_s, tx_hash = fields
    for name, addr in (("token", token), ("from", from_addr), ("to", to_addr)):
        if not _ADDRESS_RE.match(addr):
            return FixtureParseError(line_no, f"bad {name} address: {addr!r}")
    if not _TXHASH_RE.match(tx_hash):
        return FixtureParseError(line_no, f"bad txHash: {tx_hash!r}")
    for name, field in (("value", value_s), ("block", block_s), ("logIndex", index_s)):
        if not field.isdigit():
            return FixtureParseError(line_no, f"non-decimal {name}: {field!r}")
    return FixtureParseError(line_no, "malformed record")


def read_fixture(path: str | os.PathLike) -> Iterator[TransferEvent]:
    """Yield transfers from a fixture file in file order, validating each line."""
    match = _FIXTURE_LINE_RE.match
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            m = match(line)
            if m is None:
                stripped = line.rstrip("\n")
                if not stripped:
                    continue
                if _FIXTURE_LINE_RE.match(stripped) is None:
                    raise _diagnose_fixture_line(line_no, stripped)
                m = _FIXTURE_LINE_RE.match(stripped)
            value = int(m.group(4))
            if value > UINT256_MAX:
                raise FixtureValueError(line_no, "value out of uint256 range")
            yield TransferEvent(m.group(1), m.group(2), m.group(3), value,
                                int(m.group(5)), int(m.group(6)), m.group(7))


def write_fixture(events: Iterable[TransferEvent], path: str | os.PathLike) -> int:
    """Write events to a fixture file; returns the number written."""
    count = 0
    with open(path, "w", encoding="utf-8") as handle:
        for event in events:
            handle.write(format_fixture_line(event))
            handle.write("\n")
            count += 1
    return count


def window_for_block(block: int, width: int) -> BlockWindow:
    start = (block // width) * width
    return BlockWindow(start, start + width)


def partition_windows(
    events: Iterable[TransferEvent], width: int = DEFAULT_WINDOW_WIDTH,
) -> dict[BlockWindow, list[TransferEvent]]:
    """Group events into fixed-width windows, ordered by (block, logIndex)."""
    if width < 1:
        raise ValueError("window width must be >= 1 block")
    grouped: dict[BlockWindow, list[TransferEvent]] = {}
    for event in events:
        start = (event.block // width) * width
        bucket = grouped.get((start, start + width))
        if bucket is None:
            bucket = grouped[BlockWindow(start, start + width)] = []
        bucket.append(event)
    for bucket in grouped.values():
        bucket.sort(key=_EVENT_ORDER)
    return grouped


def iter_window_groups(
    events: Iterable[TransferEvent], width: int = DEFAULT_WINDOW_WIDTH,
) -> Iterator[tuple[BlockWindow, list[TransferEvent]]]:
    """Stream (window, events) groups without holding the whole input.

    Equivalent to :func:`partition_windows` for inputs whose windows are
    contiguous (every fetch- or generator-produced fixture is); one window's
    worth of events is held at a time.  Interleaved windows raise ValueError
    rather than yielding a window twice.
    """
    if width < 1:
        raise ValueError("window width must be >= 1 block")
    current_start: int | None = None
    bucket: list[TransferEvent] = []
    done: set[int] = set()
    for event in events:
        start = (event.block // width) * width
        if start != current_start:
            if current_start is not None:
                bucket.sort(key=_EVENT_ORDER)
                yield BlockWindow(current_start, current_start + width), bucket
                done.add(current_start)
            if start in done:
                raise ValueError(
                    "fixture windows are interleaved; use partition_windows")
            current_start = start
            bucket = []
        bucket.append(event)
    if current_start is not None:
        bucket.sort(key=_EVENT_ORDER)
        yield BlockWindow(current_start, current_start + width), bucket
