"""Communication-chain primitives: text/bit/waveform conversion, a
first-order channel, detection codes and equalization.

Each operation exists twice: a plain-Python native (used directly by the
grader when generating reference values) and a script builtin wrapper
registered under the names tasks call. Natives raise ValueError; the
wrappers turn that into a positioned script error.

Bits are 0/1 floats at the script boundary and ints internally. The
channel is y[n] = a*y[n-1] + (1-a)*x[n-d] + N(0, sigma): a first-order
lowpass with memory a, integer delay d and additive Gaussian noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .baselib import arg_int, arg_number, arg_numbers, arg_string, arity
from .errors import LabRuntimeError
from .interpreter import BuiltinRegistry, Curve, Interpreter
from .values import Cell, Vec


@dataclass(frozen=True)
class ChannelModel:
    a: float = 0.5
    d: int = 0
    sigma: float = 0.05

    def __post_init__(self):
        if not 0.0 <= self.a < 1.0:
            raise ValueError(f"channel memory a must be in [0, 1), got {self.a}")
        if self.d < 0 or self.d != int(self.d):
            raise ValueError(f"channel delay must be a whole number >= 0, got {self.d}")
        if self.sigma < 0:
            raise ValueError(f"noise level must be >= 0, got {self.sigma}")


def _as_bits(xs, what: str = "bit sequence") -> list[int]:
    out = []
    for x in xs:
        if x == 0:
            out.append(0)
        elif x == 1:
            out.append(1)
        else:
            raise ValueError(f"{what} elements must be 0 or 1")
    return out


def text2bitseq(msg: str) -> list[int]:
    """Encode an ASCII string as bits, 8 per character, MSB first."""
    bits: list[int] = []
    for ch in msg:
        code = ord(ch)
        if code > 127:
            raise ValueError(f"message contains a non-ASCII character {ch!r}")
        bits.extend((code >> (7 - i)) & 1 for i in range(8))
    return bits


def bitseq2text(bs) -> str:
    """Decode bits back to text; inverse of text2bitseq."""
    bits = _as_bits(bs)
    if len(bits) % 8 != 0:
        raise ValueError(f"bit sequence length {len(bits)} is not a multiple of 8")
    chars = []
    for k in range(0, len(bits), 8):
        code = 0
        for b in bits[k:k + 8]:
            code = (code << 1) | b
        chars.append(chr(code))
    return "".join(chars)


def bitseq2waveform(bs, spb: int) -> list[float]:
    """NRZ waveform: each bit held for spb samples at amplitude 0 or 1."""
    if spb < 1:
        raise ValueError(f"samples per bit must be >= 1, got {spb}")
    bits = _as_bits(bs)
    out: list[float] = []
    for b in bits:
        out.extend([float(b)] * spb)
    return out


def channel_transmit(w, ch: ChannelModel, rng: np.random.Generator | None = None) -> list[float]:
    """Pass a waveform through the channel; output has len(w)+d samples.

    With sigma=0 the output is deterministic and the RNG is never touched,
    so noiseless runs do not disturb the random stream.
    """
    x = [float(v) for v in w]
    n_out = len(x) + ch.d
    if ch.sigma > 0:
        if rng is None:
            raise ValueError("a random generator is required when sigma > 0")
        noise_samples = rng.normal(0.0, ch.sigma, size=n_out)
    else:
        noise_samples = np.zeros(n_out)
    out: list[float] = []
    y = 0.0
    for n in range(1, n_out + 1):
        k = n - ch.d
        xk = x[k - 1] if 1 <= k <= len(x) else 0.0
        y = ch.a * y + (1.0 - ch.a) * xk + float(noise_samples[n - 1])
        out.append(y)
    return out


def channel_step_response(ch: ChannelModel, n: int) -> list[float]:
    """Noiseless response to a length-n all-ones input."""
    if n < 1:
        raise ValueError(f"step response length must be >= 1, got {n}")
    quiet = ChannelModel(a=ch.a, d=ch.d, sigma=0.0)
    return channel_transmit([1.0] * n, quiet)


def waveform2bitseq(w, spb: int, threshold: float = 0.5, delay: int = 0) -> list[int]:
    """Mid-bit sampling detector; samples at or above threshold read as 1."""
    if spb < 1:
        raise ValueError(f"samples per bit must be >= 1, got {spb}")
    if delay < 0:
        raise ValueError(f"delay must be >= 0, got {delay}")
    if len(w) < delay + spb:
        raise ValueError(
            f"waveform of length {len(w)} is too short for delay {delay} "
            f"and {spb} samples per bit")
    nbits = (len(w) - delay) // spb
    mid = math.ceil(spb / 2)
    bits = []
    for k in range(1, nbits + 1):
        i = delay + (k - 1) * spb + mid
        bits.append(1 if w[i - 1] >= threshold else 0)
    return bits


def ber(tx, rx) -> float:
    """Fraction of differing positions between two equal-length bit sequences."""
    a = _as_bits(tx)
    b = _as_bits(rx)
    if len(a) != len(b):
        raise ValueError(f"bit sequences differ in length ({len(a)} vs {len(b)})")
    if not a:
        raise ValueError("bit sequences are empty")
    return sum(1 for x, y in zip(a, b) if x != y) / len(a)


def repetition_encode(bs, k: int) -> list[int]:
    if k < 1 or k % 2 == 0:
        raise ValueError(f"repetition factor must be odd and >= 1, got {k}")
    bits = _as_bits(bs)
    out: list[int] = []
    for b in bits:
        out.extend([b] * k)
    return out


def repetition_decode(bs, k: int) -> list[int]:
    if k < 1 or k % 2 == 0:
        raise ValueError(f"repetition factor must be odd and >= 1, got {k}")
    bits = _as_bits(bs)
    if len(bits) % k != 0:
        raise ValueError(
            f"bit sequence length {len(bits)} is not a multiple of {k}")
    return [1 if sum(bits[i:i + k]) * 2 > k else 0
            for i in range(0, len(bits), k)]


def parity_encode(bs, blk: int = 8) -> list[int]:
    """Append one even-parity bit after every blk data bits."""
    if blk < 1:
        raise ValueError(f"block size must be >= 1, got {blk}")
    bits = _as_bits(bs)
    if len(bits) % blk != 0:
        raise ValueError(
            f"bit sequence length {len(bits)} is not a multiple of {blk}")
    out: list[int] = []
    for i in range(0, len(bits), blk):
        block = bits[i:i + blk]
        out.extend(block)
        out.append(sum(block) % 2)
    return out


def parity_check(bs, blk: int = 8) -> tuple[list[int], list[int]]:
    """Strip parity bits; flag each block whose parity fails (detection only)."""
    if blk < 1:
        raise ValueError(f"block size must be >= 1, got {blk}")
    bits = _as_bits(bs)
    if len(bits) % (blk + 1) != 0:
        raise ValueError(
            f"bit sequence length {len(bits)} is not a multiple of {blk + 1}")
    data: list[int] = []
    flags: list[int] = []
    for i in range(0, len(bits), blk + 1):
        block = bits[i:i + blk + 1]
        data.extend(block[:blk])
        flags.append(0 if sum(block) % 2 == 0 else 1)
    return data, flags


def eye_diagram_curves(w, spb: int) -> list[tuple[list[float], list[float]]]:
    """Non-overlapping two-bit windows, each a curve over x = 1..2*spb."""
    if spb < 1:
        raise ValueError(f"samples per bit must be >= 1, got {spb}")
    width = 2 * spb
    if len(w) < width:
        raise ValueError(
            f"waveform of length {len(w)} is shorter than one window of {width}")
    x = [float(i) for i in range(1, width + 1)]
    curves = []
    for j in range(len(w) // width):
        seg = [float(v) for v in w[j * width:(j + 1) * width]]
        curves.append((x, seg))
    return curves


def equalizer_design(rx_training, tx_training, ntaps: int) -> list[float]:
    """Least-squares FIR taps mapping rx_training onto tx_training.

    The filter is causal: estimate[n] = sum_j taps[j] * rx[n-j] with rx
    taken as 0 before the first sample. Raises on rank-deficient training
    data, which cannot pin down a unique tap vector.
    """
    rx = [float(v) for v in rx_training]
    tx = [float(v) for v in tx_training]
    if len(rx) != len(tx):
        raise ValueError(
            f"training waveforms differ in length ({len(rx)} vs {len(tx)})")
    if ntaps < 1:
        raise ValueError(f"tap count must be >= 1, got {ntaps}")
    if len(rx) < ntaps:
        raise ValueError(
            f"training length {len(rx)} is shorter than the tap count {ntaps}")
    n = len(rx)
    X = np.zeros((n, ntaps))
    for j in range(ntaps):
        X[j:, j] = rx[:n - j]
    taps, _, rank, _ = np.linalg.lstsq(X, np.array(tx), rcond=None)
    if rank < ntaps:
        raise ValueError("training data is ill-conditioned; taps are not unique")
    return [float(t) for t in taps]


def equalize(w, taps) -> list[float]:
    """Causal FIR filtering, output truncated to the input length."""
    x = [float(v) for v in w]
    t = [float(v) for v in taps]
    if not t:
        raise ValueError("tap vector is empty")
    if not x:
        return []
    return [float(v) for v in np.convolve(x, t)[:len(x)]]


def noise(n: int, sigma: float, rng: np.random.Generator) -> list[float]:
    """n independent Gaussian samples with mean 0 and std sigma."""
    if n < 1:
        raise ValueError(f"sample count must be >= 1, got {n}")
    if sigma < 0:
        raise ValueError(f"noise level must be >= 0, got {sigma}")
    return [float(v) for v in rng.normal(0.0, sigma, size=n)]


def hist_curve(x, nbins: int) -> tuple[list[float], list[float]]:
    """Bin centers and counts over [min(x), max(x)] equal-width bins."""
    if nbins < 1:
        raise ValueError(f"bin count must be >= 1, got {nbins}")
    xs = [float(v) for v in x]
    if not xs:
        raise ValueError("cannot build a histogram of an empty vector")
    counts, edges = np.histogram(xs, bins=nbins)
    centers = (edges[:-1] + edges[1:]) / 2.0
    return [float(c) for c in centers], [float(c) for c in counts]


# --- script builtins ---

def _guard(fn):
    """Convert native ValueErrors into positioned script errors."""
    def wrapped(interp: Interpreter, args, line: int, col: int):
        try:
            return fn(interp, args, line, col)
        except ValueError as e:
            raise LabRuntimeError(str(e), line, col) from None
    return wrapped


def _vec(items) -> Vec:
    return Vec(float(v) for v in items)


def register(registry: BuiltinRegistry, channel: ChannelModel) -> BuiltinRegistry:
    """Register the signal-chain builtins with the given channel baked in.

    The channel builtin hides its parameters from scripts on purpose: a
    task decides the channel, the submission only observes its effect.
    """

    @_guard
    def bi_text2bitseq(interp, args, line, col):
        arity("text2bitseq", args, 1, 1, line, col)
        msg = arg_string("text2bitseq", args, 0, line, col)
        return _vec(text2bitseq(msg))

    @_guard
    def bi_bitseq2text(interp, args, line, col):
        arity("bitseq2text", args, 1, 1, line, col)
        bs = arg_numbers("bitseq2text", args, 0, line, col)
        return bitseq2text(bs)

    @_guard
    def bi_bitseq2waveform(interp, args, line, col):
        arity("bitseq2waveform", args, 2, 2, line, col)
        bs = arg_numbers("bitseq2waveform", args, 0, line, col)
        spb = arg_int("bitseq2waveform", args, 1, line, col)
        interp.check_len(len(bs) * max(spb, 1), line, col)
        return _vec(bitseq2waveform(bs, spb))

    @_guard
    def bi_channel(interp, args, line, col):
        arity("channel", args, 1, 1, line, col)
        w = arg_numbers("channel", args, 0, line, col)
        interp.check_len(len(w) + channel.d, line, col)
        return _vec(channel_transmit(w, channel, interp.rng))

    @_guard
    def bi_step_response(interp, args, line, col):
        arity("step_response", args, 1, 1, line, col)
        n = arg_int("step_response", args, 0, line, col)
        interp.check_len(max(n, 0) + channel.d, line, col)
        return _vec(channel_step_response(channel, n))

    @_guard
    def bi_waveform2bitseq(interp, args, line, col):
        arity("waveform2bitseq", args, 2, 4, line, col)
        w = arg_numbers("waveform2bitseq", args, 0, line, col)
        spb = arg_int("waveform2bitseq", args, 1, line, col)
        threshold = (arg_number("waveform2bitseq", args, 2, line, col)
                     if len(args) >= 3 else 0.5)
        delay = (arg_int("waveform2bitseq", args, 3, line, col)
                 if len(args) >= 4 else channel.d)
        return _vec(waveform2bitseq(w, spb, threshold, delay))

    @_guard
    def bi_ber(interp, args, line, col):
        arity("ber", args, 2, 2, line, col)
        tx = arg_numbers("ber", args, 0, line, col)
        rx = arg_numbers("ber", args, 1, line, col)
        return ber(tx, rx)

    @_guard
    def bi_rep_encode(interp, args, line, col):
        arity("rep_encode", args, 2, 2, line, col)
        bs = arg_numbers("rep_encode", args, 0, line, col)
        k = arg_int("rep_encode", args, 1, line, col)
        interp.check_len(len(bs) * max(k, 1), line, col)
        return _vec(repetition_encode(bs, k))

    @_guard
    def bi_rep_decode(interp, args, line, col):
        arity("rep_decode", args, 2, 2, line, col)
        bs = arg_numbers("rep_decode", args, 0, line, col)
        k = arg_int("rep_decode", args, 1, line, col)
        return _vec(repetition_decode(bs, k))

    @_guard
    def bi_parity_encode(interp, args, line, col):
        arity("parity_encode", args, 1, 2, line, col)
        bs = arg_numbers("parity_encode", args, 0, line, col)
        blk = arg_int("parity_encode", args, 1, line, col) if len(args) == 2 else 8
        return _vec(parity_encode(bs, blk))

    @_guard
    def bi_parity_check(interp, args, line, col):
        arity("parity_check", args, 1, 2, line, col)
        bs = arg_numbers("parity_check", args, 0, line, col)
        blk = arg_int("parity_check", args, 1, line, col) if len(args) == 2 else 8
        data, flags = parity_check(bs, blk)
        # two results; scripts pick them out with r(1) and r(2)
        return Cell([_vec(data), _vec(flags)])

    @_guard
    def bi_eye_diagram(interp, args, line, col):
        arity("eye_diagram", args, 2, 2, line, col)
        w = arg_numbers("eye_diagram", args, 0, line, col)
        spb = arg_int("eye_diagram", args, 1, line, col)
        fig = interp.fig_new(line, col)
        for x, y in eye_diagram_curves(w, spb):
            fig.curves.append(Curve(x, y))
        return None

    @_guard
    def bi_eq_design(interp, args, line, col):
        arity("eq_design", args, 3, 3, line, col)
        rx = arg_numbers("eq_design", args, 0, line, col)
        tx = arg_numbers("eq_design", args, 1, line, col)
        ntaps = arg_int("eq_design", args, 2, line, col)
        return _vec(equalizer_design(rx, tx, ntaps))

    @_guard
    def bi_eq_apply(interp, args, line, col):
        arity("eq_apply", args, 2, 2, line, col)
        w = arg_numbers("eq_apply", args, 0, line, col)
        taps = arg_numbers("eq_apply", args, 1, line, col)
        return _vec(equalize(w, taps))

    @_guard
    def bi_noise(interp, args, line, col):
        arity("noise", args, 2, 2, line, col)
        n = arg_int("noise", args, 0, line, col)
        sigma = arg_number("noise", args, 1, line, col)
        interp.check_len(max(n, 0), line, col)
        return _vec(noise(n, sigma, interp.rng))

    @_guard
    def bi_hist(interp, args, line, col):
        arity("hist", args, 2, 2, line, col)
        xs = arg_numbers("hist", args, 0, line, col)
        nbins = arg_int("hist", args, 1, line, col)
        centers, counts = hist_curve(xs, nbins)
        fig = interp.fig_new(line, col)
        fig.curves.append(Curve(centers, counts))
        return None

    registry.register("text2bitseq", bi_text2bitseq)
    registry.register("bitseq2text", bi_bitseq2text)
    registry.register("bitseq2waveform", bi_bitseq2waveform)
    registry.register("channel", bi_channel)
    registry.register("step_response", bi_step_response)
    registry.register("waveform2bitseq", bi_waveform2bitseq)
    registry.register("ber", bi_ber)
    registry.register("rep_encode", bi_rep_encode)
    registry.register("rep_decode", bi_rep_decode)
    registry.register("parity_encode", bi_parity_encode)
    registry.register("parity_check", bi_parity_check)
    registry.register("eye_diagram", bi_eye_diagram)
    registry.register("eq_design", bi_eq_design)
    registry.register("eq_apply", bi_eq_apply)
    registry.register("noise", bi_noise)
    registry.register("hist", bi_hist)
    return registry
