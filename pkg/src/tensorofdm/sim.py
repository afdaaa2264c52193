"""Monte Carlo SER sweeps: configuration, seeded trials, aggregation and CSV output."""

import csv
import hashlib
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np
import yaml

from .channel import PED_A_DELAYS_NS, PED_A_POWERS_DB, PED_A_SAMPLE_RATE_HZ, PowerDelayProfile, draw_channel
from .channel import pilot_channel_estimate
from .constellation import make_constellation
from .receivers import (
    ALS_STOP,
    StopRule,
    count_symbol_errors,
    ilsp,
    kr_ls_receiver,
    kr_receiver,
    rc_kr_als_receiver,
    rc_kr_receiver,
    rlsp,
    zf_receiver,
)
from .transmit import PilotPattern, build_grid, kr_encode, noise_variance, rc_encode, transmit

__all__ = [
    "SimConfig",
    "SerPoint",
    "SerCurve",
    "load_config",
    "run_trial",
    "run_sweep",
    "write_csv",
    "curves_to_csv",
    "CSV_HEADER",
    "MODE_RECEIVERS",
    "stream_names",
]

CSV_HEADER = ("receiver", "ebn0_db", "trials", "symbols", "errors", "ser", "stderr")

MODE_RECEIVERS = {
    "uncoded": ("zf", "ilsp", "rlsp"),
    "kr": ("kr", "kr_ls"),
    "rc": ("rc_kr", "rc_kr_als"),
}

# flat config key -> SimConfig field
CONFIG_KEYS = {
    "system.n": "n",
    "system.m_t": "m_t",
    "system.m_r": "m_r",
    "system.k": "k",
    "system.q": "q",
    "system.cp_len": "cp_len",
    "pilots.delta_f": "delta_f",
    "pilots.delta_k": "delta_k",
    "constellation.kind": "constellation_kind",
    "constellation.order": "constellation_order",
    "channel.delays_ns": "delays_ns",
    "channel.powers_db": "powers_db",
    "channel.sample_rate_hz": "sample_rate_hz",
    "channel.taps_override": "taps_override",
    "channel.estimate": "channel_estimate",
    "mode": "mode",
    "receivers": "receivers",
    "ebn0_grid_db": "ebn0_grid_db",
    "trials": "trials",
    "seed": "seed",
    "ilsp.max_iterations": "ilsp_max_iterations",
    "ilsp.min_err": "ilsp_min_err",
    "rlsp.alpha": "rlsp_alpha",
    "als.max_iterations": "als_max_iterations",
    "als.min_cost": "als_min_cost",
}

# RNG purpose tags; each draw type gets its own stream per trial
_CHANNEL, _GRID, _CODE, _NOISE = 0, 1, 2, 3


@dataclass(frozen=True)
class SimConfig:
    n: int = 128
    m_t: int = 2
    m_r: int = 2
    k: int = 8
    q: int = 1
    cp_len: int = 32
    delta_f: int = 3
    delta_k: int = 8
    constellation_kind: str = "qam"
    constellation_order: int = 4
    delays_ns: tuple = PED_A_DELAYS_NS
    powers_db: tuple = PED_A_POWERS_DB
    sample_rate_hz: float = PED_A_SAMPLE_RATE_HZ
    taps_override: tuple | None = None
    channel_estimate: str = "pilot"
    mode: str = "uncoded"
    receivers: tuple = ("zf", "ilsp", "rlsp")
    ebn0_grid_db: tuple = (4.0, 8.0, 12.0, 16.0, 20.0, 24.0)
    trials: int = 500
    seed: int = 0
    ilsp_max_iterations: int = 7
    ilsp_min_err: float = 1e-6
    rlsp_alpha: float = 1.0
    als_max_iterations: int = ALS_STOP.max_iterations
    als_min_cost: float = ALS_STOP.min_cost

    def __post_init__(self):
        for name in ("delays_ns", "powers_db", "receivers", "ebn0_grid_db"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        object.__setattr__(self, "ebn0_grid_db", tuple(float(x) for x in self.ebn0_grid_db))
        if self.taps_override is not None:
            object.__setattr__(self, "taps_override", tuple(float(x) for x in self.taps_override))
        self.validate()

    def validate(self):
        def fail(msg):
            raise ValueError(f"invalid configuration: {msg}")

        if min(self.n, self.m_t, self.m_r, self.k, self.q) < 1 or self.cp_len < 0:
            fail("system dimensions must be positive")
        if self.mode not in MODE_RECEIVERS:
            fail(f"mode must be one of {sorted(MODE_RECEIVERS)}, got {self.mode!r}")
        allowed = MODE_RECEIVERS[self.mode]
        for r in self.receivers:
            if r not in allowed:
                fail(f"receiver {r!r} does not apply to mode {self.mode!r} (allowed: {', '.join(allowed)})")
        if len(set(self.receivers)) != len(self.receivers):
            fail("duplicate receiver names")
        if self.mode == "uncoded" and self.q != 1:
            fail("uncoded mode needs system.q == 1")
        if self.mode == "kr" and self.q != self.m_t:
            fail(f"kr mode needs system.q == system.m_t, got q={self.q}, m_t={self.m_t}")
        if self.mode == "rc" and self.q < 2:
            fail("rc mode needs system.q >= 2")
        needs_mr = {"zf", "ilsp", "rlsp", "rc_kr", "rc_kr_als"}
        if needs_mr & set(self.receivers) and self.m_r < self.m_t:
            fail(f"receivers {sorted(needs_mr & set(self.receivers))} need m_r >= m_t")
        if self.delta_f < self.m_t:
            fail(f"pilots.delta_f={self.delta_f} must be >= m_t={self.m_t}")
        if self.delta_k < 1:
            fail("pilots.delta_k must be positive")
        if self.channel_estimate not in ("pilot", "perfect"):
            fail("channel.estimate must be 'pilot' or 'perfect'")
        pdp = self.pdp()
        if self.cp_len < pdp.max_delay:
            fail(f"cp_len={self.cp_len} is shorter than the delay spread of {pdp.max_delay} samples")
        if self.channel_estimate == "pilot" and self.n // self.delta_f < pdp.n_taps:
            fail(f"{self.n // self.delta_f} pilot subcarriers cannot resolve {pdp.n_taps} channel taps")
        if any(math.isnan(x) or x == -math.inf for x in self.ebn0_grid_db):
            fail("Eb/N0 grid values must be finite (or +inf for a noiseless point)")
        if self.trials < 0:
            fail("trials must be non-negative")
        if not 0 <= self.seed < 2**64:
            fail("seed must be a 64-bit unsigned integer")
        make_constellation(self.constellation_kind, self.constellation_order)
        StopRule(self.ilsp_max_iterations, self.ilsp_min_err)
        StopRule(self.als_max_iterations, min_cost=self.als_min_cost)
        if not 0 < self.rlsp_alpha <= 1:
            fail("rlsp.alpha must lie in (0, 1]")

    def pdp(self) -> PowerDelayProfile:
        if self.taps_override is not None:
            return PowerDelayProfile.from_taps(self.taps_override)
        return PowerDelayProfile.from_ns(self.delays_ns, self.powers_db, self.sample_rate_hz)

    def constellation(self):
        return make_constellation(self.constellation_kind, self.constellation_order)

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def replace(self, **changes) -> "SimConfig":
        return SimConfig(**{**asdict(self), **changes})

    @classmethod
    def from_mapping(cls, data: dict) -> "SimConfig":
        flat = _flatten(data)
        unknown = sorted(set(flat) - set(CONFIG_KEYS))
        if unknown:
            raise ValueError(f"unknown configuration keys: {', '.join(unknown)}")
        kwargs = {CONFIG_KEYS[k]: v for k, v in flat.items()}
        if isinstance(kwargs.get("receivers"), str):
            kwargs["receivers"] = tuple(r for r in kwargs["receivers"].split(",") if r)
        return cls(**kwargs)


def _flatten(data, prefix=""):
    out = {}
    for key, value in data.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            out.update(_flatten(value, name + "."))
        else:
            out[name] = value
    return out


def load_config(path) -> SimConfig:
    """Read a YAML file of dotted keys (``system.n: 128``); nested sections are accepted too."""
    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ValueError(f"{path}: expected a mapping of configuration keys")
    return SimConfig.from_mapping(data)


@dataclass(frozen=True)
class SerPoint:
    ebn0_db: float
    errors: int
    symbols: int

    @property
    def ser(self) -> float:
        return self.errors / self.symbols if self.symbols else 0.0

    @property
    def stderr(self) -> float:
        """Binomial standard error of the SER estimate."""
        if not self.symbols:
            return 0.0
        p = self.ser
        return math.sqrt(p * (1.0 - p) / self.symbols)


@dataclass
class SerCurve:
    receiver: str
    points: list
    trials: int
    seed: int
    config_digest: str

    def ser(self) -> np.ndarray:
        return np.array([p.ser for p in self.points])

    def stderr(self) -> np.ndarray:
        return np.array([p.stderr for p in self.points])


@dataclass
class TrialCounts:
    """Error counts of one trial: ``errors[stream][i]`` at grid point ``i``.

    A stream is a receiver name; in random-coding mode each receiver also gets
    ``<name>.data`` and ``<name>.code`` streams next to the combined one.
    """

    errors: dict = field(default_factory=dict)
    symbols: dict = field(default_factory=dict)


def stream_names(cfg: SimConfig) -> list:
    if cfg.mode != "rc":
        return list(cfg.receivers)
    return [f"{r}{suffix}" for r in cfg.receivers for suffix in ("", ".data", ".code")]


def _rng(cfg: SimConfig, trial_index: int, tag: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(trial_index, tag)))


def _run_receiver(name, cfg, y, h_p, known, c_bar, constellation):
    if name == "zf":
        return zf_receiver(y, h_p, constellation, known)
    if name == "ilsp":
        return ilsp(y, h_p, StopRule(cfg.ilsp_max_iterations, cfg.ilsp_min_err), constellation, known)
    if name == "rlsp":
        return rlsp(y, h_p, constellation, cfg.rlsp_alpha, known)
    if name == "kr":
        return kr_receiver(y, h_p, c_bar, constellation, known)
    if name == "kr_ls":
        return kr_ls_receiver(y, h_p, c_bar, constellation, known)
    if name == "rc_kr":
        return rc_kr_receiver(y, h_p, constellation, known)
    if name == "rc_kr_als":
        stop = StopRule(cfg.als_max_iterations, min_cost=cfg.als_min_cost)
        return rc_kr_als_receiver(y, h_p, stop, constellation, known)
    raise ValueError(f"unknown receiver {name!r}")


def run_trial(cfg: SimConfig, trial_index: int) -> TrialCounts:
    """One channel, one frame grid and one noise realization scaled to every grid point.

    All receivers see the same received tensor at a given Eb/N0, so their
    error counts are paired.
    """
    constellation = cfg.constellation()
    pdp = cfg.pdp()
    ch = draw_channel(_rng(cfg, trial_index, _CHANNEL), pdp, cfg.m_r, cfg.m_t, cfg.n)
    grid = build_grid(
        _rng(cfg, trial_index, _GRID), cfg.n, cfg.m_t, cfg.k, PilotPattern(cfg.delta_f, cfg.delta_k), constellation
    )
    known = (grid.known_mask, grid.s_pilot)

    c_bar = None
    code_mask = code_truth = None
    if cfg.mode == "uncoded":
        y_clean = transmit(grid.symbols, ch, cfg.cp_len)
    else:
        sig = kr_encode(grid, cfg.q) if cfg.mode == "kr" else rc_encode(_rng(cfg, trial_index, _CODE), grid, cfg.q)
        c_bar = sig.c_bar
        code_mask, code_truth = sig.code_data_mask, sig.code_truth
        y_clean = transmit(sig.x, ch, cfg.cp_len)

    # The unitary FFT maps white time-domain noise to white frequency-domain
    # noise, so the noise is added after demodulation.
    g = _rng(cfg, trial_index, _NOISE).standard_normal((2,) + y_clean.shape)
    unit_noise = (g[0] + 1j * g[1]) / np.sqrt(2.0)

    streams = stream_names(cfg)
    counts = TrialCounts({s: np.zeros(len(cfg.ebn0_grid_db), np.int64) for s in streams})
    n_code = int(code_mask.sum()) if cfg.mode == "rc" else 0
    for r in cfg.receivers:
        counts.symbols[r] = grid.n_data + n_code
        if cfg.mode == "rc":
            counts.symbols[r + ".data"] = grid.n_data
            counts.symbols[r + ".code"] = n_code

    for i, ebn0 in enumerate(cfg.ebn0_grid_db):
        sigma2 = noise_variance(ebn0, cfg.m_t, constellation.bits_per_symbol)
        y = y_clean + math.sqrt(sigma2) * unit_noise
        if cfg.channel_estimate == "perfect":
            h_p = ch.views()
        elif cfg.mode == "uncoded":
            h_p = pilot_channel_estimate(y, grid, pdp.n_taps)
        elif cfg.mode == "kr":
            h_p = pilot_channel_estimate(y, grid, pdp.n_taps, code=c_bar[:, : cfg.m_t])
        else:
            # the first code row is all ones, so block one carries the plain pilots
            h_p = pilot_channel_estimate(y[..., :1], grid, pdp.n_taps, code=np.ones((1, cfg.m_t)))
        for name in cfg.receivers:
            try:
                out = _run_receiver(name, cfg, y, h_p, known, c_bar, constellation)
            except ValueError as exc:
                raise ValueError(f"trial {trial_index}, receiver {name}: {exc}") from exc
            errs = count_symbol_errors(out.s_hat[grid.data_mask], grid.truth, constellation)
            if cfg.mode == "rc":
                code_errs = count_symbol_errors(out.c_hat[code_mask], code_truth, constellation)
                counts.errors[name + ".data"][i] += errs
                counts.errors[name + ".code"][i] += code_errs
                errs += code_errs
            counts.errors[name][i] += errs
    return counts


def _run_chunk(cfg: SimConfig, indices) -> tuple:
    """Sum of counts over a chunk of trials (runs in a worker process)."""
    streams = stream_names(cfg)
    total = {s: np.zeros(len(cfg.ebn0_grid_db), np.int64) for s in streams}
    symbols = dict.fromkeys(streams, 0)
    for t in indices:
        tc = run_trial(cfg, t)
        for s in streams:
            total[s] += tc.errors[s]
            symbols[s] += tc.symbols[s]
    return total, symbols, len(indices)


def _curves(cfg, total, symbols, done):
    return [
        SerCurve(
            s,
            sorted(
                (SerPoint(e, int(total[s][i]), symbols[s]) for i, e in enumerate(cfg.ebn0_grid_db)),
                key=lambda p: p.ebn0_db,
            ),
            done,
            cfg.seed,
            cfg.digest(),
        )
        for s in stream_names(cfg)
    ]


def run_sweep(cfg: SimConfig, workers: int = 1, out=None, chunk_size: int = 8, progress=None) -> list:
    """Run all trials and aggregate per receiver and grid point.

    Counts are integers summed per chunk, so the result does not depend on
    ``workers`` or completion order. If interrupted, the trials finished so
    far are written to ``out`` before the interrupt propagates.
    """
    if not cfg.receivers:
        if out is not None:
            write_csv([], out)
        return []
    streams = stream_names(cfg)
    total = {s: np.zeros(len(cfg.ebn0_grid_db), np.int64) for s in streams}
    symbols = dict.fromkeys(streams, 0)
    done = 0
    chunks = [range(s, min(s + chunk_size, cfg.trials)) for s in range(0, cfg.trials, chunk_size)]

    def absorb(result):
        nonlocal done
        part, sym, count = result
        for s in streams:
            total[s] += part[s]
            symbols[s] += sym[s]
        done += count
        if progress is not None:
            progress(done, cfg.trials)

    try:
        if workers <= 1:
            for ch in chunks:
                absorb(_run_chunk(cfg, ch))
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = [pool.submit(_run_chunk, cfg, ch) for ch in chunks]
                try:
                    for fut in futures:
                        absorb(fut.result())
                except BaseException:
                    for fut in futures:
                        fut.cancel()
                    raise
    except KeyboardInterrupt:
        if out is not None:
            write_csv(_curves(cfg, total, symbols, done), out)
        raise
    curves = _curves(cfg, total, symbols, done)
    if out is not None:
        write_csv(curves, out)
    return curves


def curves_to_csv(curves) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for c in curves:
        for p in c.points:
            w.writerow([c.receiver, repr(p.ebn0_db), c.trials, p.symbols, p.errors, repr(p.ser), repr(p.stderr)])
    return buf.getvalue()


def write_csv(curves, path):
    with open(path, "w", newline="") as fh:
        fh.write(curves_to_csv(curves))


def config_fields() -> list:
    return [f.name for f in fields(SimConfig)]
