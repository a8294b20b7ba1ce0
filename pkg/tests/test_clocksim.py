import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from convsim.clocksim import (
    AddressableShiftRegister, Circuit, CoefficientRom, Downsampler, LineBuffer, Register,
    WidthOverflowError, downsample, mac,
)


def test_register_one_cycle_delay():
    c = Circuit()
    r = c.add(Register("r", d=lambda: 7))
    c.step()
    # the value written on the first edge is visible after it
    assert r.q == 7
    c.reset()
    seen = []
    src = c.add(Register("src", d=lambda: 7))
    dst = c.add(Register("dst", d=lambda: src.q))
    for _ in range(2):
        seen.append(dst.q)
        c.step()
    seen.append(dst.q)
    assert seen == [0, 0, 7]


@pytest.mark.parametrize("reverse", [False, True])
def test_two_registers_in_series_delay_two(reverse):
    c = Circuit()
    feed = iter(range(1, 100))
    cur = {"x": 0}
    a = c.add(Register("a", d=lambda: cur["x"]))
    b = c.add(Register("b", d=lambda: a.q))
    if reverse:
        c.permute([1, 0])
    outs = []
    for t in range(10):
        cur["x"] = next(feed)
        c.step()
        outs.append(b.q)
    # input presented before step t appears at b after step t + 1
    assert outs[1:] == list(range(1, 10))
    assert c.clock.cycles == 10


@pytest.mark.parametrize("depth", [1, 2, 4, 7])
def test_line_buffer_delay_equals_depth(depth):
    c = Circuit()
    cur = {"x": 0}
    lb = c.add(LineBuffer("lb", depth, d=lambda: cur["x"]))
    reads = []
    for v in range(1, 9 + depth):
        cur["x"] = v
        reads.append(lb.q)
        c.step()
    # the word written at step t is read back at step t + depth
    assert reads[depth:] == list(range(1, 9))
    assert reads[:depth] == [0] * depth


def test_line_buffer_enable_holds():
    c = Circuit()
    en = {"on": False}
    lb = c.add(LineBuffer("lb", 2, d=lambda: 5, enable=lambda: en["on"]))
    c.run(3)
    assert lb.storage == [0, 0] and lb.write_index == 0
    en["on"] = True
    c.step()
    assert lb.storage == [5, 0]


def test_asr_addressing():
    c = Circuit()
    it = iter(range(1, 10))
    asr = c.add(AddressableShiftRegister("asr", 3, d=lambda: next(it)))
    c.run(4)
    assert [asr.read(a) for a in range(3)] == [4, 3, 2]


def test_rom_read_only():
    rom = CoefficientRom("rom", [3, 1, 4])
    assert rom.read(2) == 4 and len(rom) == 3
    with pytest.raises(TypeError):
        rom.words[0] = 9


def test_width_overflow_detected():
    c = Circuit()
    c.add(Register("r", d=lambda: 128, bits=8))
    with pytest.raises(WidthOverflowError, match="r"):
        c.step()
    c2 = Circuit()
    c2.add(LineBuffer("lb", 2, d=lambda: -129, word_bits=8))
    with pytest.raises(WidthOverflowError):
        c2.step()


def test_mac():
    assert mac(0, 5, 3) == 15
    assert mac(100, 0, 12345) == 100
    with pytest.raises(WidthOverflowError):
        mac(0, 200, 200, bits=16)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.integers(-255, 255), st.integers(-2**15, 2**15 - 1)), min_size=5, max_size=5))
def test_mac_fold_is_dot_product(pairs):
    acc = 0
    for s, k in pairs:
        acc = mac(acc, s, k, bits=40)
    assert acc == sum(s * k for s, k in pairs)


def test_downsample_function():
    stream = [(i, True) for i in range(25)]
    assert downsample(stream, 1) == stream
    assert len(downsample(stream, 5)) == 5
    assert [v for v, _ in downsample(stream, 5, phase=4)] == [4, 9, 14, 19, 24]
    assert downsample([(1, False), (2, True)], 1) == [(2, True)]
    with pytest.raises(ValueError):
        downsample(stream, 0)


def test_downsampler_captures_completed_sums():
    # a 5-tap MAC walking its taps; the capture keeps only finished dot products
    taps = [[1, 2, 3, 4, 5], [6, 7, 8, 9, 10]]
    coeffs = [2, -1, 0, 3, 1]
    c = Circuit()
    addr = c.add(Register("addr"))
    addr.d = lambda: (addr.q + 1) % 5
    word = c.add(Register("word"))
    word.d = lambda: word.q + (addr.q == 4)
    acc = c.add(Register("acc"))
    acc.d = lambda: mac(0 if addr.q == 0 else acc.q, taps[word.q % 2][addr.q], coeffs[addr.q])
    cap = c.add(Downsampler("cap", 5, phase=0, d=lambda: acc.q))
    got = []
    for _ in range(11):
        c.step()
        if cap.strobe:
            got.append(cap.q)
    expected = [sum(t * k for t, k in zip(row, coeffs)) for row in taps]
    # first capture sees the reset accumulator, then completed sums
    assert got[1:] == expected


def test_downsampler_strobe_period():
    c = Circuit()
    ds = c.add(Downsampler("ds", 3, phase=1, d=lambda: c.clock.cycles))
    strobes = []
    for _ in range(9):
        c.step()
        strobes.append(ds.strobe)
    assert strobes == [False, True, False] * 3


def _random_circuit(seed):
    rnd = random.Random(seed)
    c = Circuit()
    src = c.add(Register("src"))
    src.d = lambda: (src.q * 7 + 3) % 101
    els = [src]
    for i in range(12):
        kind = rnd.choice(["reg", "lb", "asr"])
        a, b = rnd.choice(els), rnd.choice(els)

        def probe(e):
            if isinstance(e, AddressableShiftRegister):
                return lambda: e.taps[-1]
            return lambda: e.q

        pa, pb = probe(a), probe(b)
        if kind == "reg":
            e = Register(f"r{i}", d=lambda pa=pa, pb=pb: (pa() + 2 * pb()) % 997)
        elif kind == "lb":
            e = LineBuffer(f"l{i}", rnd.randint(1, 4), d=lambda pa=pa, pb=pb: (pa() - pb()) % 997)
        else:
            e = AddressableShiftRegister(f"a{i}", rnd.randint(1, 3), d=lambda pa=pa: pa())
        els.append(c.add(e))
    return c, els


def _state(els):
    out = []
    for e in els:
        if isinstance(e, LineBuffer):
            out.append((tuple(e.storage), e.write_index))
        elif isinstance(e, AddressableShiftRegister):
            out.append(tuple(e.taps))
        else:
            out.append(e.q)
    return out


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.randoms(use_true_random=False))
def test_permuting_evaluation_order_changes_nothing(seed, rnd):
    c1, e1 = _random_circuit(seed)
    c2, e2 = _random_circuit(seed)
    order = list(range(len(c2.elements)))
    rnd.shuffle(order)
    c2.permute(order)
    for _ in range(25):
        c1.step()
        c2.step()
        assert _state(e1) == _state(e2)


def test_permute_validates():
    c = Circuit()
    c.add(Register("r", d=lambda: 0))
    with pytest.raises(ValueError):
        c.permute([1])


def test_trace_csv():
    c = Circuit(period_ns=10)
    r = c.add(Register("r"))
    r.d = lambda: r.q + 1
    tr = c.enable_trace()
    tr.watch("r", lambda: r.q)
    tr.watch("twice", lambda: 2 * r.q)
    c.run(3)
    lines = tr.to_csv().splitlines()
    assert lines[0] == "cycle,signal_name,value"
    assert len(lines) == 1 + 3 * 2
    assert lines[1:3] == ["1,r,1", "1,twice,2"]
    assert c.clock.elapsed_ns == 30


def test_reset_restores_everything():
    c = Circuit()
    r = c.add(Register("r", init=4))
    r.d = lambda: r.q + 1
    lb = c.add(LineBuffer("lb", 3, d=lambda: r.q))
    c.run(5)
    c.reset()
    assert r.q == 4 and lb.storage == [0, 0, 0] and c.clock.cycles == 0
