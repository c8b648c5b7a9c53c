import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from beepmis import codec
from beepmis.codec import ALONE, AlignmentFault, DecodeFault, StreamDecoder, WindowTooShort


def brute_carry(n: int) -> int:
    z = 0
    while n % 2 == 0:
        n //= 2
        z += 1
    return z


def brute_parity(n: int) -> int:
    b = brute_carry(n)
    return sum(brute_carry(m) == b for m in range(1, n + 1)) % 2


# -- block encoding -----------------------------------------------------------------


@pytest.mark.parametrize("c,d", [(0, 0), (0, 1), (1, 0), (1, 1)])
def test_encode_block_two(c, d):
    assert codec.encode_block(2, [c, d]) == [0, 0, 1, 1, 1, 0, 1, c, 1, d, 1]


@pytest.mark.parametrize("a", [0, 1])
def test_encode_block_zero(a):
    assert codec.encode_block(0, [a]) == [0, 0, 1, 0, 1, a, 1]


def test_encode_block_four():
    g, h, i = 1, 0, 1
    assert codec.encode_block(4, [g, h, i]) == [0, 0, 1, 1, 1, 0, 1, 0, 1, g, 1, h, 1, i, 1]


@pytest.mark.parametrize("t", [0, 1, 2, 3, 4, 7, 8, 1000])
def test_block_length(t):
    m = codec.time_width(t)
    assert len(codec.encode_block(t, [0] * m)) == 2 + 4 * m + 1


def test_encode_rejects_wrong_data_length():
    with pytest.raises(ValueError):
        codec.encode_block(4, [1, 0])


def test_fixed_width_wraps_counter():
    assert codec.encode_block(5, [1], time_bits=2) == codec.encode_block(1, [1], time_bits=2)


def test_double_zero_only_at_block_start():
    bits = codec.encode_stream((t, [1] * codec.time_width(t)) for t in range(200))
    starts = [i for i in range(len(bits) - 1) if bits[i] == bits[i + 1] == 0]
    expected, pos = [], 0
    for t in range(200):
        expected.append(pos)
        pos += 3 + 4 * codec.time_width(t)
    assert starts == expected


# -- decoding -------------------------------------------------------------------------


def test_join_mid_block_two_emits_block_three():
    e, f = 1, 0
    stream = codec.encode_block(2, [0, 1]) + codec.encode_block(3, [e, f]) + [0, 0]
    events = codec.decode_stream(stream[5:])
    assert events[0] == codec.DecodedBlock(3, (e, f))


def test_four_silent_rounds_mean_alone():
    dec = StreamDecoder()
    out = [dec.feed(0) for _ in range(4)]
    assert out[:3] == [None, None, None]
    assert out[3] == ALONE


def test_silence_after_a_beep_is_not_alone():
    events = codec.decode_stream([1, 0, 0, 1, 0])
    assert ALONE not in events


def test_malformed_separator_faults():
    with pytest.raises(DecodeFault):
        codec.decode_stream([0, 0, 1, 1, 0, 1, 1, 1])


def test_round_trip_exhaustive_small():
    rng = np.random.default_rng(1)
    sent = [(t, tuple(rng.integers(0, 2, codec.time_width(t)).tolist())) for t in range(1 << 12)]
    got = codec.decode_stream(codec.encode_stream(sent) + [0, 0])
    assert [(b.index, b.data) for b in got] == sent


@settings(max_examples=200, deadline=None)
@given(st.integers(0, (1 << 16) - 1), st.data())
def test_round_trip_any_block(t, data):
    d = data.draw(st.lists(st.integers(0, 1), min_size=codec.time_width(t), max_size=codec.time_width(t)))
    got = codec.decode_stream(codec.encode_block(t, d) + [0, 0])
    assert got == [codec.DecodedBlock(t, tuple(d))]


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 3), st.integers(0, 10))
def test_fixed_width_round_trip(w, t):
    d = [1, 0, 1]
    got = codec.decode_stream(codec.encode_block(t, d, time_bits=w) + [0, 0], time_bits=w, data_bits=3)
    assert got == [codec.DecodedBlock(t % (1 << w), tuple(d))]


# -- carry and parity sequences -------------------------------------------------------


def test_carry_prefix_16():
    assert [codec.carry(n) for n in range(1, 17)] == [0, 1, 0, 2, 0, 1, 0, 3, 0, 1, 0, 2, 0, 1, 0, 4]


def test_parity_prefix_16():
    assert [codec.parity_bit(n) for n in range(1, 17)] == [1, 1, 0, 1, 1, 0, 0, 1, 1, 1, 0, 0, 1, 0, 0, 1]


def test_carry_of_power_of_two():
    assert codec.carry(1 << 10) == 10


def test_zero_rejected():
    with pytest.raises(ValueError):
        codec.carry(0)
    with pytest.raises(ValueError):
        codec.parity_bit(0)


def test_sequences_match_definitions():
    assert [codec.carry(n) for n in range(1, 600)] == [brute_carry(n) for n in range(1, 600)]
    assert [codec.parity_bit(n) for n in range(1, 600)] == [brute_parity(n) for n in range(1, 600)]


def test_parity_slice_matches_pointwise():
    assert codec.parity_slice(37, 200).tolist() == [codec.parity_bit(n) for n in range(37, 237)]


def test_odd_positions_alternate():
    odd = [codec.parity_bit(n) for n in range(1, 400, 2)]
    assert all(a != b for a, b in zip(odd, odd[1:]))


# -- alignment ------------------------------------------------------------------------


def oracle(start: int, l: int):
    bp = [brute_parity(n) for n in range(1, start + codec.window_length(l) + 1)]
    window = bp[start - 1 : start - 1 + codec.window_length(l)]
    levels = [brute_carry(start + i) if brute_carry(start + i) <= l else -1 for i in range(len(window))]
    return window, levels


@pytest.mark.parametrize("start", range(1, 40))
def test_level_zero_any_eleven_bits(start):
    window, levels = oracle(start, 0)
    al = codec.align_window(window, 0)
    assert al.levels.tolist() == levels
    assert al.phase == start % 2


def test_level_three_from_37():
    window, levels = oracle(37, 3)
    assert len(window) == 88
    al = codec.align_window(window, 3)
    assert al.levels.tolist() == levels
    assert al.phase == 37 % 16
    assert al.phase_ext == 37 % 32


def test_all_equal_window_faults():
    with pytest.raises(AlignmentFault):
        codec.align_window([1] * 44, 2)


def test_short_window_signals_insufficiency():
    with pytest.raises(WindowTooShort):
        codec.align_window(codec.parity_slice(5, 21).tolist(), 1)


@pytest.mark.parametrize("l", range(0, 7))
def test_alignment_exhaustive_offsets(l):
    bad = []
    for start in range(1, (1 << (l + 3)) + 1):
        w = codec.parity_slice(start, codec.window_length(l))
        al = codec.align_window(w, l)
        want = [codec.carry(start + i) if codec.carry(start + i) <= l else -1 for i in range(len(w))]
        if al.levels.tolist() != want or al.phase_ext != start % (1 << (l + 2)):
            bad.append(start)
    assert bad == []
