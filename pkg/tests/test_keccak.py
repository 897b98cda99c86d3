"""Digest checks against published Keccak-256 vectors."""

from tokengraphs.keccak import keccak_256


def test_empty_input_vector():
    assert keccak_256(b"").hex() == (
        "c5d2460186f7233c927e7db2dcc703c0e500b653ca82273b7bfad8045d85a470")


def test_abc_vector():
    assert keccak_256(b"abc").hex() == (
        "4e03657aea45a94fc7d47ba826c8d667c0d1e6e33a64a036ec44f58fa12d6c45")


def test_transfer_signature_topic():
    assert keccak_256(b"Transfer(address,address,uint256)").hex() == (
        "ddf252ad1be2c89b69c2b068fc378daa952ba7f163c4a11628f55a4df523b3ef")


def test_multiblock_input_differs_from_truncated():
    long = keccak_256(b"x" * 200)
    assert len(long) == 32
    assert long != keccak_256(b"x" * 199)


def test_rate_boundary_lengths():
    # padding must be correct at and around the 136-byte rate
    digests = {keccak_256(b"y" * n) for n in (135, 136, 137, 272)}
    assert len(digests) == 4
