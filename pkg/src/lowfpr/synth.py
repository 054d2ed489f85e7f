"""Synthetic ensemble-score datasets with controllable difficulty.

Each sample gets a latent logit drawn from its cluster's normal distribution;
each ensemble member then sees the latent plus its own normal noise, squashed
through the logistic function. Clusters:

* benign core            N(benign_logit_mean, logit_sd)
* malicious core         N(malicious_logit_mean, logit_sd)
* ambiguous benign,      optional subpopulations near the decision boundary
  ambiguous malicious    that get the elevated "novel/ambiguous" member noise
* novel malicious        out-of-distribution families, test split only

All randomness comes from the counter-based Philox generator keyed by
(config.seed, stream constant), so output is bit-reproducible for a fixed
seed regardless of platform or worker count. Draw order is fixed: latents,
member noise, split assignment, family assignment.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from .data import PredictionDataset

# Stream constants separating the product data stream from the test-only
# oracle stream. Arbitrary but frozen; changing them changes every dataset.
_DATA_STREAM = 0x64617461  # "data"
_ORACLE_STREAM = 0x6F7263  # "orc"

_SEEN_FAMILY_COUNT = 8
_NOVEL_FAMILY_COUNT = 4


@dataclass(frozen=True)
class SynthConfig:
    """Generator knobs. Defaults give a moderately separable two-class problem."""

    n_benign: int = 10_000
    n_malicious: int = 10_000
    member_count: int = 5
    novel_fraction: float = 0.0
    benign_logit_mean: float = -2.0
    malicious_logit_mean: float = 2.0
    novel_logit_mean: float = 0.5
    logit_sd: float = 1.0
    member_noise_sd_base: float = 0.5
    member_noise_sd_novel: float = 0.5
    ambiguous_benign_fraction: float = 0.0
    ambiguous_benign_logit_mean: float = 0.0
    ambiguous_malicious_fraction: float = 0.0
    ambiguous_malicious_logit_mean: float = 0.0
    split_fractions: tuple[float, float, float] = (0.5, 0.25, 0.25)
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "split_fractions", tuple(float(f) for f in self.split_fractions))
        if self.n_benign < 0 or self.n_malicious < 0:
            raise ValueError("sample counts must be nonnegative")
        if self.member_count < 1:
            raise ValueError("member_count must be at least 1")
        for name in ("novel_fraction", "ambiguous_benign_fraction", "ambiguous_malicious_fraction"):
            value = getattr(self, name)
            if not (0.0 <= value <= 1.0):
                raise ValueError(f"{name} must be in [0, 1], got {value!r}")
        if self.novel_fraction + self.ambiguous_malicious_fraction > 1.0:
            raise ValueError("novel_fraction + ambiguous_malicious_fraction must not exceed 1")
        if self.logit_sd <= 0.0:
            raise ValueError("logit_sd must be positive")
        if self.member_noise_sd_base < 0.0:
            raise ValueError("member_noise_sd_base must be nonnegative")
        if self.member_noise_sd_novel < self.member_noise_sd_base:
            raise ValueError("member_noise_sd_novel must be at least member_noise_sd_base")
        if len(self.split_fractions) != 3 or any(f < 0.0 for f in self.split_fractions):
            raise ValueError("split_fractions must be three nonnegative numbers")
        if abs(sum(self.split_fractions) - 1.0) > 1e-9:
            raise ValueError(f"split_fractions must sum to 1, got {sum(self.split_fractions)!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SynthConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "split_fractions" in d:
            d = dict(d, split_fractions=tuple(d["split_fractions"]))
        return cls(**d)


def load_config(path: str | Path) -> SynthConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    return SynthConfig.from_dict(raw)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed=np.random.SeedSequence([int(seed), stream])))


def _round_count(fraction: float, n: int) -> int:
    return min(n, round(fraction * n))


def _generate_with(config: SynthConfig, rng: np.random.Generator) -> PredictionDataset:
    nb, nm, t = config.n_benign, config.n_malicious, config.member_count
    n = nb + nm
    n_novel = _round_count(config.novel_fraction, nm)
    n_amb_mal = min(nm - n_novel, _round_count(config.ambiguous_malicious_fraction, nm))
    n_core_mal = nm - n_novel - n_amb_mal
    n_amb_ben = _round_count(config.ambiguous_benign_fraction, nb)
    n_core_ben = nb - n_amb_ben

    # Canonical row order: benign core, ambiguous benign, malicious core,
    # ambiguous malicious, novel malicious.
    means = np.concatenate(
        [
            np.full(n_core_ben, config.benign_logit_mean),
            np.full(n_amb_ben, config.ambiguous_benign_logit_mean),
            np.full(n_core_mal, config.malicious_logit_mean),
            np.full(n_amb_mal, config.ambiguous_malicious_logit_mean),
            np.full(n_novel, config.novel_logit_mean),
        ]
    )
    elevated = np.zeros(n, dtype=bool)
    elevated[n_core_ben : n_core_ben + n_amb_ben] = True
    elevated[nb + n_core_mal :] = True
    noise_sd = np.where(elevated, config.member_noise_sd_novel, config.member_noise_sd_base)

    latents = means + rng.normal(0.0, config.logit_sd, size=n)
    noise = rng.normal(0.0, 1.0, size=(n, t)) * noise_sd[:, None]
    scores = _sigmoid(latents[:, None] + noise)
    # The logistic map keeps open-interval values in (0, 1); extreme logits can
    # still round to the endpoints, which the dataset schema allows.
    np.clip(scores, 0.0, 1.0, out=scores)

    splits = np.array(
        rng.choice(np.array(["train", "validation", "test"], dtype=object), size=n, p=config.split_fractions),
        dtype=object,
    )
    is_novel = np.zeros(n, dtype=bool)
    is_novel[n - n_novel :] = True
    splits[is_novel] = "test"

    families = np.full(n, None, dtype=object)
    n_seen_mal = n_core_mal + n_amb_mal
    seen_ids = rng.integers(0, _SEEN_FAMILY_COUNT, size=n_seen_mal)
    for i, fam in zip(range(nb, nb + n_seen_mal), seen_ids):
        families[i] = f"fam_s{fam}"
    novel_ids = rng.integers(0, _NOVEL_FAMILY_COUNT, size=n_novel)
    for i, fam in zip(range(n - n_novel, n), novel_ids):
        families[i] = f"fam_n{fam}"

    labels = np.concatenate([np.zeros(nb, dtype=np.int64), np.ones(nm, dtype=np.int64)])
    ids = np.array([f"syn-{i}" for i in range(n)], dtype=object)
    return PredictionDataset(
        sample_ids=ids,
        labels=labels,
        splits=splits,
        families=families,
        scores=scores,
        provenance=f"synth(seed={config.seed})",
    )


def generate(config: SynthConfig) -> PredictionDataset:
    """Generate a dataset. Bit-identical output for identical configs."""
    return _generate_with(config, _rng(config.seed, _DATA_STREAM))


@dataclass(frozen=True)
class OracleMetrics:
    """Reference metric estimates from a large independent draw. Test-only."""

    auc: float
    tpr_at: dict[float, float]
    n_oracle: int


def oracle_metrics(config: SynthConfig, n_oracle: int, fprs=(1e-2, 1e-3)) -> OracleMetrics:
    """Estimate population AUC and TPR-at-FPR by direct counting.

    Regenerates the scenario at n_oracle samples on a stream independent of
    generate()'s, then counts on sorted ensemble means. Never used by the
    product path.
    """
    if n_oracle < 2:
        raise ValueError("n_oracle must be at least 2")
    total = config.n_benign + config.n_malicious
    if total == 0:
        raise ValueError("config generates no samples")
    scale = n_oracle / total
    scaled = replace(
        config,
        n_benign=max(1, round(config.n_benign * scale)),
        n_malicious=max(1, round(config.n_malicious * scale)),
    )
    ds = _generate_with(scaled, _rng(config.seed, _ORACLE_STREAM))
    means = ds.scores.mean(axis=1)
    benign = np.sort(means[ds.labels == 0])
    malicious = means[ds.labels == 1]
    lo = np.searchsorted(benign, malicious, side="left")
    hi = np.searchsorted(benign, malicious, side="right")
    score_auc = float((lo + 0.5 * (hi - lo)).sum() / (benign.size * malicious.size))
    tpr_at = {}
    for f in fprs:
        if not (0.0 < f < 1.0):
            raise ValueError(f"fpr {f!r} outside (0, 1)")
        threshold = np.quantile(benign, 1.0 - f)
        tpr_at[float(f)] = float((malicious >= threshold).mean())
    return OracleMetrics(auc=score_auc, tpr_at=tpr_at, n_oracle=len(ds))


# Named scenarios used by the studies and the test suite. Sizes are chosen so
# each effect is decisive at desk scale.


def default_scenario(seed: int = 0) -> SynthConfig:
    """Overlapping classes with homoscedastic member noise; 100k val / 100k test."""
    return SynthConfig(
        n_benign=100_000,
        n_malicious=100_000,
        member_count=5,
        benign_logit_mean=-2.0,
        malicious_logit_mean=1.5,
        logit_sd=1.6,
        member_noise_sd_base=0.8,
        member_noise_sd_novel=0.8,
        split_fractions=(0.0, 0.5, 0.5),
        seed=seed,
    )


def heteroscedastic_scenario(seed: int = 0) -> SynthConfig:
    """A mid-scoring malicious subpopulation carries high member disagreement.

    Promoting uncertain samples lifts those hard detections over the budgeted
    threshold, so the local adjustments beat the plain global threshold.
    """
    return SynthConfig(
        n_benign=20_000,
        n_malicious=20_000,
        member_count=5,
        benign_logit_mean=-3.5,
        malicious_logit_mean=3.0,
        logit_sd=1.0,
        member_noise_sd_base=0.2,
        member_noise_sd_novel=2.5,
        ambiguous_malicious_fraction=0.35,
        ambiguous_malicious_logit_mean=0.0,
        split_fractions=(0.0, 0.5, 0.5),
        seed=seed,
    )


def noisy_fp_scenario(seed: int = 0) -> SynthConfig:
    """A high-scoring benign subpopulation is unreliable (high disagreement).

    Penalizing epistemic uncertainty demotes those would-be false positives,
    so fitting lv1 drives its epistemic weight negative.
    """
    return SynthConfig(
        n_benign=20_000,
        n_malicious=20_000,
        member_count=5,
        benign_logit_mean=-3.5,
        malicious_logit_mean=2.0,
        logit_sd=1.0,
        member_noise_sd_base=0.2,
        member_noise_sd_novel=2.5,
        ambiguous_benign_fraction=0.08,
        ambiguous_benign_logit_mean=1.0,
        split_fractions=(0.0, 0.5, 0.5),
        seed=seed,
    )


def novelty_scenario(seed: int = 0) -> SynthConfig:
    """Out-of-distribution malicious families with elevated member noise in test."""
    return SynthConfig(
        n_benign=20_000,
        n_malicious=20_000,
        member_count=5,
        novel_fraction=0.3,
        benign_logit_mean=-2.5,
        malicious_logit_mean=2.5,
        novel_logit_mean=0.5,
        logit_sd=1.0,
        member_noise_sd_base=0.4,
        member_noise_sd_novel=2.0,
        split_fractions=(0.4, 0.3, 0.3),
        seed=seed,
    )
