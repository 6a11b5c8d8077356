"""Built-in scenario grids.

Each preset is a list of :class:`ScenarioConfig`. All presets randomize
1:1 and use the Table 5 estimator roster unless stated otherwise.
"""
from __future__ import annotations

from .dgp import DgpSpec, ShiftSpec
from .runner import ScenarioConfig

HET = DgpSpec("heterogeneous")
CONST = DgpSpec("constant")
FIG1_SIZES = (100, 250, 500, 750, 1000)
FIG2_TRIAL_SIZES = (50, 100, 200)
SHIFT_ORDER = ("none", "observed_small", "observed_large", "unobserved_small",
               "unobserved_large")
FIG2_ROSTER = ("tmle", "tmle_prog", "tmle_oracle")


def _one(sid, dgp=HET, shift="none", **kw):
    return [ScenarioConfig(scenario_id=sid, dgp=dgp, shift=ShiftSpec(shift), **kw)]


def _build() -> dict[str, list[ScenarioConfig]]:
    p = {
        "het_base": _one("het_base"),
        "const_base": _one("const_base", CONST),
        "obs_small": _one("obs_small", shift="observed_small"),
        "obs_large": _one("obs_large", shift="observed_large"),
        "unobs_small": _one("unobs_small", shift="unobserved_small"),
        "unobs_large": _one("unobs_large", shift="unobserved_large"),
        "small_hist": _one("small_hist", n_hist=100),
        "small_trial": _one("small_trial", n=100),
        "smoke": _one("smoke", reps=1, n=100, n_hist=200),
    }
    p["shifts"] = p["obs_small"] + p["obs_large"] + p["unobs_small"] + p["unobs_large"]
    p["table5"] = (p["het_base"] + p["const_base"] + p["shifts"]
                   + p["small_hist"] + p["small_trial"])
    p["fig1a"] = [ScenarioConfig(scenario_id=f"fig1a_nhist{m}", dgp=HET, n_hist=m)
                  for m in FIG1_SIZES]
    p["fig1b"] = [ScenarioConfig(scenario_id=f"fig1b_n{m}", dgp=HET, n=m)
                  for m in FIG1_SIZES]
    p["fig2"] = [ScenarioConfig(scenario_id=f"fig2_n{m}", dgp=CONST, n=m, n_hist=m * m,
                                estimators=FIG2_ROSTER)
                 for m in FIG2_TRIAL_SIZES]
    p["fig3"] = [ScenarioConfig(scenario_id=f"fig3_{s}", dgp=HET, shift=ShiftSpec(s))
                 for s in SHIFT_ORDER]
    return p


PRESETS = _build()


def preset(name: str) -> list[ScenarioConfig]:
    from ..errors import ConfigError
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {sorted(PRESETS)}")
    return list(PRESETS[name])
