"""Run configuration shared by the verification suites and the command line."""

from dataclasses import dataclass, field, replace

from .errors import ConfigError

DEFAULT_TOLERANCES = {
    "psd": 1e-10,
    "normalization": 1e-8,
    "covariance": 1e-10,
    "margin": 1e-9,
    "w_vacuum": 1e-9,
    "w_identity": 1e-10,
    "coupling": 1e-6,
    "truncation_budget": 1e-8,
    "swap": 1e-10,
    "identity": 1e-6,
    "modified": 2e-4,
    "instrument": 1e-9,
    "choi": 1e-8,
    "dilation": 1e-8,
    "residual": 1e-6,
}


@dataclass(frozen=True)
class RunConfig:
    dim: int = 32
    quad: int = 64
    bins: int = 64
    seed: int = 0
    fmt: str = "csv"
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))

    def __post_init__(self):
        if self.dim < 4:
            raise ConfigError("dimension must be at least 4")
        if self.bins < 4:
            raise ConfigError("angle bin count must be at least 4")
        if self.quad < 1:
            raise ConfigError("quadrature order must be positive")
        if self.fmt not in ("csv", "json"):
            raise ConfigError(f"unknown output format {self.fmt!r}")

    def tol(self, key):
        return self.tolerances[key]

    def require_coupling_order(self):
        if self.quad < 2 * self.dim:
            raise ConfigError(f"coupling commands need --quad >= 2 * --dim ({2 * self.dim}), got {self.quad}")

    def with_overrides(self, pairs):
        """Apply ``key=value`` tolerance overrides."""
        tol = dict(self.tolerances)
        for item in pairs or ():
            key, sep, value = item.partition("=")
            if not sep or key not in tol:
                raise ConfigError(f"bad tolerance override {item!r}; known keys: {', '.join(sorted(tol))}")
            try:
                tol[key] = float(value)
            except ValueError:
                raise ConfigError(f"tolerance {key!r} needs a number, got {value!r}") from None
        return replace(self, tolerances=tol)

    def echo(self):
        return {
            "dim": self.dim,
            "quad": self.quad,
            "bins": self.bins,
            "seed": self.seed,
            "format": self.fmt,
            "tolerances": dict(sorted(self.tolerances.items())),
        }
