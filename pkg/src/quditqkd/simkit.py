"""Seeded Monte Carlo engine: protocol x channel runs, reports and sweeps.

Randomness
----------
All randomness comes from numpy's Philox4x64 counter-based generator seeded
through ``SeedSequence(master_seed, spawn_key=(stream,))``:

* stream 0 (pulses): pulse ``i`` owns the eight doubles at positions
  ``8*i .. 8*i+7`` of the stream, i.e. Philox counter blocks ``2i`` and
  ``2i+1``. A worker starting at pulse ``a`` calls ``advance(2*a)``, so the
  uniforms a pulse sees never depend on chunking or worker count.
  Layout: Alice symbol, Alice basis/pair, three channel draws, Bob
  basis/pair, Bob outcome, one spare.
* stream 1: choice of the positions disclosed for error estimation.
* sweeps: run ``i`` uses ``mix_seed(master_seed, i)``, the first 64-bit word of
  ``SeedSequence(master_seed, spawn_key=(2, i)).generate_state``.

Changing any of this changes every golden value downstream.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Iterator, Sequence

import numpy as np

from . import analysis
from .channel import CHANNEL_UNIFORMS, ChannelKind, ChannelSpec, EveBatch, transmit_batch
from .protocols import (
    DEFAULT_SAMPLE_FRACTION,
    MeasBatch,
    PrepBatch,
    ProtocolKind,
    ProtocolSpec,
    estimate_qber,
    keep_mask,
    measure_batch,
    prepare_batch,
    sift,
    sift_rate_note,
    sift_rate_theory,
)
from .quditmath import mub_set

PULSE_STREAM = 0
DISCLOSURE_STREAM = 1
SWEEP_STREAM = 2
UNIFORMS_PER_PULSE = 8
DEFAULT_PULSES = 100_000
CHUNK_PULSES = 1 << 14
MAX_SEED = 2**64 - 1


def _seed_sequence(master_seed: int, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in key))


def derive_substream(master_seed: int, index: int) -> np.random.Generator:
    """Independent generator for ``(master_seed, index)``; equal inputs give equal streams."""
    return np.random.Generator(np.random.Philox(_seed_sequence(master_seed, index)))


def mix_seed(master_seed: int, i: int) -> int:
    """Seed for the i-th run of a sweep."""
    return int(_seed_sequence(master_seed, SWEEP_STREAM, i).generate_state(1, np.uint64)[0])


def pulse_uniforms(master_seed: int, start: int, stop: int) -> np.ndarray:
    """Uniforms for pulses ``start..stop-1``, shape (stop-start, 8)."""
    bitgen = np.random.Philox(_seed_sequence(master_seed, PULSE_STREAM))
    # Philox4x64 emits four 64-bit words per counter step
    bitgen.advance(start * UNIFORMS_PER_PULSE // 4)
    n = stop - start
    return np.random.Generator(bitgen).random(n * UNIFORMS_PER_PULSE).reshape(n, UNIFORMS_PER_PULSE)


def pulse_substream(master_seed: int, index: int) -> np.ndarray:
    """The eight uniforms owned by a single pulse."""
    return pulse_uniforms(master_seed, index, index + 1)[0]


@dataclass(frozen=True)
class RunConfig:
    protocol: ProtocolSpec
    channel: ChannelSpec = field(default_factory=ChannelSpec.identity)
    num_pulses: int = DEFAULT_PULSES
    sample_fraction: float = DEFAULT_SAMPLE_FRACTION
    master_seed: int = 0
    workers: int = field(default=1, compare=False)

    def __post_init__(self):
        if int(self.num_pulses) != self.num_pulses or self.num_pulses < 1:
            raise ValueError(f"run.pulses must be a positive integer, got {self.num_pulses!r}")
        if not 0 < self.sample_fraction <= 1:
            raise ValueError(f"run.sample_fraction must lie in (0, 1], got {self.sample_fraction!r}")
        if int(self.master_seed) != self.master_seed or not 0 <= self.master_seed <= MAX_SEED:
            raise ValueError(f"run.seed must be an integer in [0, 2^64), got {self.master_seed!r}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        self.channel.check_compatible(self.protocol)

    def to_config(self) -> dict:
        return {
            "protocol": self.protocol.to_config(),
            "channel": self.channel.to_config(),
            "run": {
                "pulses": self.num_pulses,
                "sample_fraction": self.sample_fraction,
                "seed": self.master_seed,
            },
        }


@dataclass
class Transcript:
    preps: PrepBatch
    meas: MeasBatch
    eve: EveBatch | None

    def __len__(self) -> int:
        return len(self.preps)

    def kept(self) -> np.ndarray:
        return keep_mask(self.preps, self.meas)

    def iter_records(self) -> Iterator[dict]:
        kept = self.kept()
        for i in range(len(self)):
            row = {
                "idx": i,
                "prep": self.preps.record(i).to_dict(),
                "meas": self.meas.record(i).to_dict(),
                "kept": bool(kept[i]),
            }
            if self.eve is not None:
                row["eve"] = self.eve.record(i).to_dict()
            yield row

    def write_jsonl(self, fh) -> None:
        for row in self.iter_records():
            fh.write(json.dumps(row, separators=(",", ":")) + "\n")


def _simulate_chunk(config: RunConfig, start: int, stop: int):
    u = pulse_uniforms(config.master_seed, start, stop)
    preps, states = prepare_batch(config.protocol, u[:, 0], u[:, 1])
    received, eve = transmit_batch(config.channel, states, u[:, 2:2 + CHANNEL_UNIFORMS])
    meas = measure_batch(config.protocol, received, u[:, 5], u[:, 6])
    return preps, meas, eve


def simulate(config: RunConfig, workers: int | None = None) -> Transcript:
    """Run prepare -> transmit -> measure for every pulse."""
    n = config.num_pulses
    bounds = [(a, min(a + CHUNK_PULSES, n)) for a in range(0, n, CHUNK_PULSES)]
    workers = config.workers if workers is None else workers
    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: _simulate_chunk(config, *b), bounds))
    else:
        parts = [_simulate_chunk(config, a, b) for a, b in bounds]
    return Transcript(
        PrepBatch.concat([p[0] for p in parts]),
        MeasBatch.concat([p[1] for p in parts]),
        EveBatch.concat([p[2] for p in parts]),
    )


def rate_model(spec: ProtocolSpec) -> ProtocolKind | None:
    """Which key-rate formula applies: BB84 for two bases, MUB for a full d+1 set."""
    if spec.kind in (ProtocolKind.CHAU02, ProtocolKind.CHAU15):
        return None
    if spec.num_bases == 2:
        return ProtocolKind.BB84
    if spec.num_bases == spec.dim + 1:
        return ProtocolKind.MUB
    return None


@dataclass(frozen=True)
class RunReport:
    """Aggregated statistics of one run.

    ``qber_exact`` is the mismatch fraction over the whole sifted key;
    ``qber_estimate`` uses only the disclosed sample. ``secure`` compares the
    exact rate with the protocol's bound. Everything except ``elapsed_s`` is a
    pure function of the configuration.
    """

    config: dict
    pulses: int
    sifted_length: int
    sift_rate: float
    sift_rate_theory: float
    qber_estimate: float | None
    qber_exact: float | None
    key_rate: float | None
    threshold: float | None
    secure: bool | None
    disclosed: int
    final_key_length: int
    secret_bits: float | None
    insufficient_data: bool
    notes: tuple[str, ...] = ()
    elapsed_s: float = field(default=0.0, compare=False)

    @property
    def qber_stderr(self) -> float | None:
        """Binomial standard error of ``qber_exact``."""
        if self.qber_exact is None or not self.sifted_length:
            return None
        q = self.qber_exact
        return math.sqrt(q * (1 - q) / self.sifted_length)

    @property
    def sift_stderr(self) -> float:
        p = self.sift_rate_theory
        return math.sqrt(p * (1 - p) / self.pulses)

    def to_dict(self, timing: bool = True) -> dict:
        out = asdict(self)
        out["notes"] = list(self.notes)
        if not timing:
            out.pop("elapsed_s")
        return out

    def to_json(self, timing: bool = False, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(timing=timing), indent=indent, sort_keys=False)

    @classmethod
    def from_dict(cls, doc: dict) -> RunReport:
        doc = dict(doc)
        doc["notes"] = tuple(doc.get("notes", ()))
        return cls(**doc)

    def flat_row(self) -> dict:
        cfg = self.config
        return {
            "protocol": cfg["protocol"]["kind"],
            "d": cfg["protocol"]["d"],
            "m": cfg["protocol"].get("m", ""),
            "channel": cfg["channel"]["kind"],
            "q": cfg["channel"].get("q", ""),
            "seed": cfg["run"]["seed"],
            "pulses": self.pulses,
            "sifted_length": self.sifted_length,
            "sift_rate": self.sift_rate,
            "sift_rate_theory": self.sift_rate_theory,
            "qber_estimate": self.qber_estimate,
            "qber_exact": self.qber_exact,
            "key_rate": self.key_rate,
            "threshold": self.threshold,
            "secure": self.secure,
            "final_key_length": self.final_key_length,
            "secret_bits": self.secret_bits,
            "insufficient_data": self.insufficient_data,
        }


REPORT_COLUMNS = [
    "protocol", "d", "m", "channel", "q", "seed", "pulses", "sifted_length", "sift_rate",
    "sift_rate_theory", "qber_estimate", "qber_exact", "key_rate", "threshold", "secure",
    "final_key_length", "secret_bits", "insufficient_data",
]


def format_value(v) -> str:
    """Locale-free CSV cell: 6 significant digits for floats."""
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def reports_to_csv(reports: Sequence[RunReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for r in reports:
        row = r.flat_row()
        writer.writerow([format_value(row[c]) for c in REPORT_COLUMNS])
    return buf.getvalue()


def run_experiment(config: RunConfig, workers: int | None = None, transcript: list | None = None) -> RunReport:
    """Simulate ``config`` and summarise it.

    If ``transcript`` is a list, the full :class:`Transcript` is appended to it.
    """
    t0 = time.perf_counter()
    spec = config.protocol
    tr = simulate(config, workers)
    if transcript is not None:
        transcript.append(tr)
    sifted = sift(tr.preps, tr.meas)
    notes = []
    note = sift_rate_note(spec)
    if note:
        notes.append(note)

    model = rate_model(spec)
    if spec.kind in (ProtocolKind.CHAU02, ProtocolKind.CHAU15):
        bound = analysis.security_bound(spec.kind, spec.dim)
        if spec.kind is ProtocolKind.CHAU15 and spec.dim < analysis.CHAU15_FULL_TOLERANCE_MIN_DIM:
            notes.append("50% tolerance is established for d >= 16 only")
    elif model is not None:
        bound = analysis.threshold(model, spec.dim)
    else:
        bound = None
        notes.append(f"no key-rate formula for m={spec.num_bases} of d+1={spec.dim + 1} bases")

    n_sift = len(sifted)
    if n_sift == 0:
        return RunReport(
            config=config.to_config(), pulses=config.num_pulses, sifted_length=0, sift_rate=0.0,
            sift_rate_theory=sift_rate_theory(spec), qber_estimate=None, qber_exact=None,
            key_rate=None, threshold=bound, secure=None, disclosed=0, final_key_length=0,
            secret_bits=None, insufficient_data=True, notes=tuple(notes + ["no sifted pulses"]),
            elapsed_s=time.perf_counter() - t0,
        )

    qber_exact = sifted.error_rate
    qber_est, disclosed = estimate_qber(
        sifted, config.sample_fraction, derive_substream(config.master_seed, DISCLOSURE_STREAM)
    )
    rate = None
    if model is not None:
        try:
            rate = analysis.key_rate(model, qber_exact, spec.dim)
        except ValueError:
            rate = None
    final_len = n_sift - len(disclosed)
    secret = None if rate is None else max(rate, 0.0) * final_len
    return RunReport(
        config=config.to_config(),
        pulses=config.num_pulses,
        sifted_length=n_sift,
        sift_rate=sifted.sift_rate,
        sift_rate_theory=sift_rate_theory(spec),
        qber_estimate=qber_est,
        qber_exact=qber_exact,
        key_rate=rate,
        threshold=bound,
        secure=None if bound is None else bool(qber_exact < bound),
        disclosed=len(disclosed),
        final_key_length=final_len,
        secret_bits=secret,
        insufficient_data=final_len == 0,
        notes=tuple(notes),
        elapsed_s=time.perf_counter() - t0,
    )


SWEEP_PARAMETERS = {"q": "q", "depolarizing": "q", "d": "d", "dimension": "d", "m": "m", "num_bases": "m"}


def _substitute(base: RunConfig, parameter: str, value, seed: int) -> RunConfig:
    spec, chan = base.protocol, base.channel
    if parameter == "q":
        if chan.kind not in (ChannelKind.IDENTITY, ChannelKind.DEPOLARIZING):
            raise ValueError(f"cannot sweep q on a {chan.kind.value} channel")
        chan = ChannelSpec.depolarizing(float(value))
    elif parameter == "d":
        d = int(value)
        m = spec.num_bases
        if spec.kind is ProtocolKind.MUB and m == spec.dim + 1:
            m = d + 1
        uniform = spec.basis_bias is None or len(set(spec.basis_bias)) == 1
        bias = None if uniform or m != spec.num_bases else spec.basis_bias
        spec = ProtocolSpec(spec.kind, d, m if spec.kind is ProtocolKind.MUB else None, bias)
        chan = chan.retarget(d)
    elif parameter == "m":
        m = int(value)
        kind = ProtocolKind.MUB if spec.kind is ProtocolKind.BB84 else spec.kind
        spec = ProtocolSpec(kind, spec.dim, m)
        if chan.kind is ChannelKind.INTERCEPT_RESEND:
            chan = ChannelSpec.intercept_resend(mub_set(spec.dim, m))
    else:
        raise ValueError(f"unknown sweep parameter {parameter!r}")
    return replace(base, protocol=spec, channel=chan, master_seed=seed)


def sweep(base: RunConfig, parameter: str, values: Sequence, workers: int | None = None) -> list[RunReport]:
    """One report per value of ``q``, ``d`` or ``m``; seeds come from :func:`mix_seed`.

    Sweeping ``m`` turns BB84 into the general basis protocol and makes an
    intercept-resend attacker use the same m bases.
    """
    key = SWEEP_PARAMETERS.get(parameter)
    if key is None:
        raise ValueError(f"unknown sweep parameter {parameter!r}; expected one of {sorted(SWEEP_PARAMETERS)}")
    configs = [_substitute(base, key, v, mix_seed(base.master_seed, i)) for i, v in enumerate(values)]
    return [run_experiment(c, workers) for c in configs]


__all__ = [
    "CHUNK_PULSES",
    "DEFAULT_PULSES",
    "REPORT_COLUMNS",
    "RunConfig",
    "RunReport",
    "Transcript",
    "UNIFORMS_PER_PULSE",
    "derive_substream",
    "format_value",
    "mix_seed",
    "pulse_substream",
    "pulse_uniforms",
    "rate_model",
    "reports_to_csv",
    "run_experiment",
    "simulate",
    "sweep",
]
