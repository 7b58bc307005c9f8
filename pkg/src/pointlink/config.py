"""Experiment configuration: a flat key=value file format with CLI
overrides, validation of the coupled fields, and a stable hash."""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass

from .encoder import SQUARE_QAM_ORDERS


@dataclass
class ExperimentConfig:
    # geometry / tokenization
    n_points: int = 256            # N, divisible by 16
    n_tokens: int = 64             # N'
    n_tokens_coarse: int = 16      # N'' (main branch second stage)
    embed_dim: int = 32            # C'
    sa_radius: float = 0.2         # ball-query radius, stage 1 (unit cube)
    sa_radius_coarse: float = 0.4  # stage 2
    sa_k: int = 16                 # ball-query arity
    attn_k: int = 8                # attention neighborhood size
    # modulation
    mod_order: int = 16            # M, square QAM
    n_symbols: int = 40            # N_mod
    branch_ratio: str = "4:1"      # n_main : n_auxi
    temperature: float = 1.5
    estimator: str = "gumbel-soft"
    # adaptive modules
    rate_allocator: bool = False
    rate_weight: float = 2e-4      # lambda
    rate_loss_verbatim: bool = False
    channel_adapter: bool = True
    # channel
    channel: str = "awgn"          # awgn | rayleigh
    snr_lo: float = -0.5
    snr_hi: float = 10.5
    snr_fixed: float | None = None  # train at one SNR instead of the range
    csi_noise: float = 0.0
    target_power: float = 1.0
    # receiver
    n_demod: int = 16
    offset_range: float = 0.1
    # heads
    head_hidden: int = 128
    adapter_hidden: int = 128
    # training
    epochs: int = 200
    batch_size: int = 8
    lr: float = 1e-3
    weight_decay: float = 1e-4
    lr_halving_epochs: int = 20
    seed: int = 0

    def __post_init__(self):
        self.validate()

    # ---- derived quantities --------------------------------------------------

    @property
    def ratio_parts(self) -> tuple[int, int]:
        try:
            a, b = (int(p) for p in self.branch_ratio.split(":"))
        except ValueError:
            raise ValueError(f"branch_ratio must look like '4:1', got {self.branch_ratio!r}")
        if a < 1 or b < 0:
            raise ValueError(f"branch_ratio parts must be positive, got {self.branch_ratio!r}")
        return a, b

    @property
    def n_main(self) -> int:
        a, b = self.ratio_parts
        return self.n_symbols * a // (a + b)

    @property
    def n_auxi(self) -> int:
        return self.n_symbols - self.n_main

    @property
    def n_fine(self) -> int:
        return self.n_points // 16

    def validate(self):
        if self.n_points % 16 != 0:
            raise ValueError(f"n_points must be divisible by 16, got {self.n_points}")
        if not 1 <= self.n_tokens <= self.n_points:
            raise ValueError("n_tokens must be in [1, n_points]")
        if not 1 <= self.n_tokens_coarse <= self.n_tokens:
            raise ValueError("n_tokens_coarse must be in [1, n_tokens]")
        if self.mod_order not in SQUARE_QAM_ORDERS:
            raise ValueError(f"mod_order must be in {SQUARE_QAM_ORDERS}")
        a, b = self.ratio_parts
        if (self.n_symbols * a) % (a + b) != 0:
            raise ValueError(
                f"n_symbols={self.n_symbols} does not split evenly at ratio {self.branch_ratio}")
        if self.estimator not in ("gumbel-soft", "ste", "uniform-noise"):
            raise ValueError(f"unknown estimator {self.estimator!r}")
        if self.channel not in ("awgn", "rayleigh"):
            raise ValueError(f"channel must be awgn or rayleigh, got {self.channel!r}")
        if self.temperature <= 0:
            raise ValueError("temperature must be > 0")
        if self.lr <= 0:
            raise ValueError("lr must be > 0")
        if self.rate_weight < 0:
            raise ValueError("rate_weight must be >= 0")
        if self.batch_size < 1 or self.epochs < 0:
            raise ValueError("batch_size must be >= 1 and epochs >= 0")

    # ---- serialization --------------------------------------------------------

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def config_hash(self) -> str:
        text = "\n".join(f"{k}={v}" for k, v in sorted(self.to_dict().items()))
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def write(self, path):
        with open(path, "w") as fh:
            for k, v in self.to_dict().items():
                fh.write(f"{k} = {'none' if v is None else v}\n")


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}


def _parse_value(name: str, raw: str):
    if name not in _FIELDS:
        raise KeyError(f"unknown config key: {name}")
    raw = raw.strip()
    ftype = _FIELDS[name].type
    if raw.lower() in ("none", "null"):
        return None
    if "bool" in ftype:
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ValueError(f"{name} expects a boolean, got {raw!r}")
    if ftype.startswith("int"):
        return int(raw)
    if ftype.startswith("float"):
        return float(raw)
    return raw


def load_config(path=None, overrides: dict | None = None) -> ExperimentConfig:
    """Read a flat `key = value` file (''#'' comments) and apply overrides
    given as {key: raw-string-or-value}."""
    values: dict = {}
    if path is not None:
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ValueError(f"{path}:{lineno}: expected 'key = value'")
                key, raw = (s.strip() for s in line.split("=", 1))
                values[key] = _parse_value(key, raw)
    for key, val in (overrides or {}).items():
        values[key] = _parse_value(key, val) if isinstance(val, str) else val
    return ExperimentConfig(**values)


def desk_config(**overrides) -> ExperimentConfig:
    """CPU-tractable defaults (the dataclass defaults)."""
    return ExperimentConfig(**overrides)


def paper_scale_config(**overrides) -> ExperimentConfig:
    """Full-scale settings; executable in principle, not sized for CI."""
    base = dict(n_points=2048, n_tokens=512, n_tokens_coarse=128,
                embed_dim=128, mod_order=64, n_symbols=300,
                branch_ratio="2:1", attn_k=16, batch_size=256,
                n_demod=128, epochs=400)
    base.update(overrides)
    return ExperimentConfig(**base)
