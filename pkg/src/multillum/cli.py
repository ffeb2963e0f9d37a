"""Command-line experiment runner.

Usage::

    multillum kernel      --preset sim --out runs/sim
    multillum stability   --preset sim --seed 7
    multillum adversarial --config adv.ini --set adversarial.kind=number
    multillum limits      --preset confocal
    multillum quadrature  --out runs/quad

Configuration is an INI document; presets supply defaults, a ``--config``
file overrides them and command-line flags override both. Exit codes: 0
success, 2 configuration error, 3 certification failure, 4 numerical
failure.
"""
from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

import numpy as np

from . import adversarial as adv
from . import limits as lim
from .io import Config, ConfigError, meta, read_csv, write_csv, write_json, write_measure_csv, write_svg
from .measures import DiscreteMeasure
from .operator import imaging_kernel, quadrature_convergence
from .optics import PSF_KINDS, IlluminationSequence, Psf, QuadratureError
from .spectral import (BAND_AUDIT_TOL, CompositeSweep, ConstantFamily, CutoffError, NyquistError, PlaneWaveFamily,
                       ProfileSweep, SharpPeak, affine_degradation_sweep, essential_cutoffs, synthesize_psf_multi,
                       verify_perturbed_patterns)

EXIT_OK, EXIT_CONFIG, EXIT_CERT, EXIT_NUMERIC = 0, 2, 3, 4

_PI = repr(float(np.pi))
_BASE = {
    "psf": {"kind": "sinc", "scale": _PI},
    "grid": {"bins": "4096", "span": "4"},
    "cutoffs": {"b_lower_rel": "0.1", "eps_rel": "1e-3"},
    "sweep": {"start": "-8", "stop": "8", "step": "0.45"},
}
PRESETS = {
    "sim": {"illumination": {"family": "plane_waves", "frequency": _PI}},
    "confocal": {"illumination": {"family": "profile", "profile": "sinc", "profile_scale": _PI}},
    "smlm": {"illumination": {"family": "sharp_peak", "width": "0.1"}},
    "beam": {"illumination": {"family": "composite", "profile": "sinc", "profile_scale": _PI,
                              "weights": "1, 0.6, 0.3", "offsets": "0, 0.7, -1.1"}},
}


def preset_config(name: str) -> Config:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; expected one of {sorted(PRESETS)}")
    data = {s: dict(v) for s, v in _BASE.items()}
    for s, kv in PRESETS[name].items():
        data.setdefault(s, {}).update(kv)
    data["run"] = {"preset": name}
    return Config(data)


# -- config to objects ------------------------------------------------------------

def _psf(cfg: Config, section: str = "psf", prefix: str = "") -> Psf:
    kind = cfg.get(section, prefix + "kind", "sinc")
    if kind not in PSF_KINDS or kind == "sampled":
        raise ConfigError(f"{cfg.where(section, prefix + 'kind')}: unknown PSF kind {kind!r}")
    scale = cfg.get(section, prefix + "scale", np.pi, float)
    if not scale > 0:
        raise ConfigError(f"{cfg.where(section, prefix + 'scale')}: PSF scale must be positive")
    return Psf.gauss(scale) if kind == "gauss" else Psf(kind, scale)


def _family(cfg: Config):
    sec = "illumination"
    fam = cfg.get(sec, "family", "plane_waves")
    if fam == "plane_waves":
        f = cfg.get(sec, "frequency", np.pi, float)
        if not f > 0:
            raise ConfigError(f"{cfg.where(sec, 'frequency')}: frequency must be positive")
        return PlaneWaveFamily(f)
    if fam == "constant":
        return ConstantFamily(cfg.get(sec, "level", 1.0, float))
    if fam == "sharp_peak":
        w = cfg.get(sec, "width", 0.1, float)
        if not w > 0:
            raise ConfigError(f"{cfg.where(sec, 'width')}: width must be positive")
        return SharpPeak(w)
    if fam in ("profile", "composite"):
        prof = _psf(cfg, sec, "profile_") if cfg.has(sec, "profile_kind") else Psf(
            cfg.get(sec, "profile", "sinc"), cfg.get(sec, "profile_scale", np.pi, float))
        if fam == "profile":
            return ProfileSweep(prof)
        w = cfg.get(sec, "weights", None, list)
        o = cfg.get(sec, "offsets", None, list)
        if len(w) != len(o):
            raise ConfigError(f"{cfg.where(sec, 'offsets')}: weights and offsets differ in length")
        return CompositeSweep(prof, tuple(w), tuple(o))
    raise ConfigError(f"{cfg.where(sec, 'family')}: unknown illumination family {fam!r}")


def _sequence(cfg: Config, family) -> IlluminationSequence:
    if isinstance(family, (PlaneWaveFamily, ConstantFamily)):
        return family.sequence()
    start = cfg.get("sweep", "start", -8.0, float)
    stop = cfg.get("sweep", "stop", 8.0, float)
    step = cfg.get("sweep", "step", 0.45, float)
    if not (step > 0 and stop > start):
        raise ConfigError(f"{cfg.where('sweep', 'step')}: sweep needs start < stop and a positive step")
    return family.sequence(np.arange(start, stop + 0.5 * step, step))


def _psf_multi(cfg: Config, family, psf):
    bins = cfg.get("grid", "bins", 4096, int)
    span = cfg.get("grid", "span", 4.0, float)
    if bins < 16 or not span > 1:
        raise ConfigError(f"{cfg.where('grid', 'bins')}: need bins >= 16 and span > 1")
    return synthesize_psf_multi(family, psf, n_bins=bins, span=span)


def _ints(values):
    return [int(v) for v in values]


# -- subcommands --------------------------------------------------------------------

def cmd_kernel(cfg: Config, out: Path, seed: int) -> int:
    info = meta(cfg, seed)
    psf = _psf(cfg)
    fam = _family(cfg)
    pm = _psf_multi(cfg, fam, psf)
    b_rel = cfg.get("cutoffs", "b_lower_rel", 0.1, float)
    e_rel = cfg.get("cutoffs", "eps_rel", 1e-3, float)
    cut = essential_cutoffs(pm, b_rel * pm.b_upper, e_rel * pm.b_upper)

    write_csv(out / "psf_multi_profile.csv", ["lag", "re", "im"],
              zip(pm.lag, pm.profile.real, pm.profile.imag), info)
    exact = pm.exact(pm.xi) if pm.exact is not None else None
    header = ["xi", "re", "im", "abs"] + (["exact_abs"] if exact is not None else [])
    rows = [[x, s.real, s.imag, abs(s)] + ([abs(exact[k])] if exact is not None else [])
            for k, (x, s) in enumerate(zip(pm.xi, pm.spectrum))]
    write_csv(out / "psf_multi_spectrum.csv", header, rows, info)

    k = cfg.get("kernel", "points", 9, int)
    pts = np.linspace(cfg.get("kernel", "lo", 0.0, float), cfg.get("kernel", "hi", 1.0, float), k)
    seq = _sequence(cfg, fam)
    K = imaging_kernel(seq, psf, pts, pts).values
    write_csv(out / "kernel.csv", ["z", "y", "re", "im"],
              ([pts[i], pts[j], K[i, j].real, K[i, j].imag] for i in range(k) for j in range(k)), info)

    oob = pm.out_of_band_energy()
    report = {
        "label": pm.label,
        "omega_psf": pm.omega_psf,
        "omega_illu": pm.omega_illu,
        "omega_multi": pm.omega_multi,
        "cutoffs": cut.to_dict(),
        "out_of_band_energy": oob,
        "band_audit_pass": bool(oob < BAND_AUDIT_TOL),
        "triangle_linf_rel": None if exact is None else float(np.abs(np.abs(pm.spectrum) - np.abs(exact)).max() / pm.b_upper),
    }
    write_json(out / "cutoffs.json", report, info)
    if cfg.get("kernel", "plot", True, bool):
        write_svg(out / "psf_multi_spectrum.svg", pm.xi, np.abs(pm.spectrum), info, "xi", "|F[psf_multi]|")
    print(f"kernel: omega_hat={cut.omega_hat:.6g} omega_check={cut.omega_check:.6g} "
          f"out_of_band={oob:.3g} -> {out}")
    return EXIT_OK


def _sources(cfg: Config) -> DiscreteMeasure:
    loc = cfg.get("sources", "locations", [0.3, 0.55, 0.7], list)
    amp = cfg.get("sources", "amplitudes", [1.0, 0.8, 1.3], list)
    if len(loc) != len(amp):
        raise ConfigError(f"{cfg.where('sources', 'amplitudes')}: locations and amplitudes differ in length")
    return DiscreteMeasure(loc, amp)


def cmd_stability(cfg: Config, out: Path, seed: int) -> int:
    info = meta(cfg, seed)
    psf = _psf(cfg)
    fam = _family(cfg)
    seq = _sequence(cfg, fam)
    pm = _psf_multi(cfg, fam, psf)
    f = _sources(cfg)
    sec = "stability"
    sigmas = cfg.get(sec, "sigmas", [1e-2, 5e-3], list)
    eps = cfg.get(sec, "eps", 0.0, float)
    trials = cfg.get(sec, "trials", 100, int)
    mode = cfg.get(sec, "mode", "uniform_bounded")
    kw = dict(pm=pm, b_lower_rel=cfg.get("cutoffs", "b_lower_rel", 0.1, float), mode=mode, seed=seed)
    if trials < 1 or any(s < 0 for s in sigmas) or eps < 0:
        raise ConfigError(f"{cfg.where(sec, 'sigmas')}: need trials >= 1 and nonnegative noise levels")
    reports = [verify_perturbed_patterns(f, seq, eps, psf, s, trials, **kw) for s in sigmas]
    first = reports[0].max_error
    rows, table = [], []
    for r in reports:
        ratio = r.max_error / first if first > 0 else None
        table.append({"sigma": r.sigma, "eps": r.eps, "max_weighted_error": r.max_error,
                      "empirical_constant": r.empirical_constant, "spread": r.spread, "ratio": ratio})
        rows += [[r.sigma, r.eps, i, e, e / r.sigma if r.sigma > 0 else 0.0] for i, e in enumerate(r.errors)]
    write_csv(out / "stability_trials.csv", ["sigma", "eps", "trial", "weighted_error", "constant"], rows, info)
    payload = {"summary": table, "reports": [r.to_dict() for r in reports]}
    if cfg.has(sec, "affine_eps"):
        fit = affine_degradation_sweep(f, seq, psf, sigmas, cfg.get(sec, "affine_eps", None, list),
                                       cfg.get(sec, "affine_trials", 10, int), **kw)
        payload["affine_fit"] = fit.to_dict()
    write_json(out / "stability.json", payload, info)
    for t in table:
        print(f"stability: sigma={t['sigma']:.3g} max_error={t['max_weighted_error']:.4g} "
              f"C={t['empirical_constant']:.4g} ratio={t['ratio']}")
    return EXIT_OK


def cmd_adversarial(cfg: Config, out: Path, seed: int) -> int:
    info = meta(cfg, seed)
    psf = _psf(cfg)
    fam = _family(cfg)
    pm = _psf_multi(cfg, fam, psf)
    sec = "adversarial"
    if cfg.get(sec, "exact_spectrum", True, bool) and pm.exact is not None:
        pm = pm.with_exact_spectrum()
    kind = cfg.get(sec, "kind", "complex")
    n = cfg.get(sec, "n", 3, int)
    m_min = cfg.get(sec, "m_min", 1.0, float)
    if cfg.has(sec, "sigma"):
        sigma = cfg.get(sec, "sigma", None, float)
    else:
        sigma = cfg.get(sec, "sigma_rel", 1e-3, float) * m_min * pm.b_upper
    s = cfg.get(sec, "s", adv.DEFAULT_CLUSTER_SPREAD, float)
    try:
        pair = adv.construct_pair(kind, n, sigma, m_min, pm, s=s,
                                  normalize_all=cfg.get(sec, "normalize_all", False, bool))
    except adv.ConditioningError:
        raise
    except adv.AdversarialError as exc:
        raise ConfigError(f"{cfg.where(sec, 'kind')}: {exc}") from None
    audit = adv.amplitude_bounds_audit(pair)
    payload = pair.to_dict()
    payload["amplitude_audit"] = audit.to_dict()
    cert = pair.certificate
    if cfg.get(sec, "negative_control", False, bool):
        pair = adv.perturbed_pair(pair)
        cert = adv.certify_pair(pair, pm)
        payload["negative_control"] = cert.to_dict()
    write_measure_csv(out / "mu.csv", pair.mu, info)
    write_measure_csv(out / "mu_hat.csv", pair.mu_hat, info)
    payload["passed"] = cert.passed
    write_json(out / "certificate.json", payload, info)
    print(f"adversarial: kind={pair.kind} n={n} tau={pair.tau:.6g} max_gap/sigma="
          f"{cert.max_spectral_gap / sigma:.3g} passed={cert.passed}")
    return EXIT_OK if cert.passed else EXIT_CERT


def _brute_incoherence(im, n_grid=201):
    # dense grid over the free coordinates of each pinned subproblem, real x
    im = np.asarray(im, dtype=float)
    k = im.shape[1]
    if k > 3:
        return None
    g = np.linspace(-1, 1, n_grid)
    best = np.inf
    for j in range(k):
        free = [q for q in range(k) if q != j]
        mesh = np.meshgrid(*([g] * len(free)), indexing="ij")
        x = np.zeros((g.size ** len(free), k))
        x[:, j] = 1
        for q, m in zip(free, mesh):
            x[:, q] = m.ravel()
        best = min(best, float(np.abs(x @ im.T).max(axis=1).min()))
    return best


def cmd_limits(cfg: Config, out: Path, seed: int) -> int:
    info = meta(cfg, seed)
    psf = _psf(cfg)
    fam = _family(cfg)
    pm = _psf_multi(cfg, fam, psf)
    sec = "limits"
    if cfg.get(sec, "exact_spectrum", True, bool) and pm.exact is not None:
        pm = pm.with_exact_spectrum()
    ns = _ints(cfg.get(sec, "n_values", [2, 3, 4, 5], list))
    m_min = cfg.get(sec, "m_min", 1.0, float)
    sigma = cfg.get(sec, "sigma_rel", 1e-3, float) * m_min * pm.b_upper
    b_lower = cfg.get("cutoffs", "b_lower_rel", 0.1, float) * pm.b_upper
    s = cfg.get(sec, "s", 4.0, float)
    c_supp = cfg.get(sec, "c_supp", 1.0, float)
    c_num = cfg.get(sec, "c_num", 1.0, float)
    if not cfg.has(sec, "c_supp") or not cfg.has(sec, "c_num"):
        print("limits: c_supp/c_num default to 1.0; values are formula evaluations, not certified constants",
              file=sys.stderr)
    try:
        rows = lim.limit_table(pm, ns, sigma, m_min, b_lower, s, c_supp, c_num)
        scaled = lim.limit_table(pm, ns, 7.0 * sigma, 7.0 * m_min, b_lower, s, c_supp, c_num)
    except (lim.LimitError, adv.AdversarialError, CutoffError) as exc:
        raise ConfigError(f"{cfg.where(sec, 'sigma_rel')}: {exc}") from None
    keys = list(rows[0])
    homog = max(abs(a[k] - b[k]) / abs(a[k]) for a, b in zip(rows, scaled) for k in keys if k != "n")
    write_csv(out / "limits.csv", keys, ([r[k] for k in keys] for r in rows), info)
    payload = {
        "inputs": {"sigma": sigma, "m_min": m_min, "b_lower": b_lower, "b_upper": pm.b_upper, "s": s,
                   "c_supp": c_supp, "c_num": c_num},
        "formulas": {
            "location_upper": "(c_supp/omega_hat)*(sigma/(m_min*b_lower))^(1/(2n-1))",
            "location_lower": "(e^-1/omega_check)*(sigma/(m_min*b_upper))^(1/(2n-1))",
            "number_upper": "(c_num/omega_hat)*(sigma/(m_min*b_lower))^(1/(2n-2))",
            "number_lower": "2*(e^-1/omega_check)*(sigma/(m_min*b_upper))^(1/(2n-2))",
            "cluster_tau": "(0.2e^-1/(omega_check*s^((2n+1)/(2n-1))))*(sigma/(m_min*b_upper))^(1/(2n-1))",
            "cluster_spacing": "s*cluster_tau",
        },
        "table": rows,
        "homogeneity": {"scale": 7.0, "max_relative_change": homog},
    }
    if cfg.has(sec, "matrix"):
        path = Path(cfg.get(sec, "matrix"))
        if not path.is_absolute() and cfg.source not in ("<preset>",):
            path = Path(cfg.source).parent / path
        if not path.is_file():
            raise ConfigError(f"{cfg.where(sec, 'matrix')}: matrix file {path} not found")
        header, body = read_csv(path)
        try:
            im = np.array([[float(v) for v in header]] + [[float(v) for v in r] for r in body])
        except ValueError:
            im = np.array([[float(v) for v in r] for r in body])
        value = lim.illumination_incoherence(im)
        oracle = _brute_incoherence(im)
        sub = {"matrix": im.tolist(), "incoherence": value, "grid_oracle": oracle,
               "oracle_abs_diff": None if oracle is None else abs(value - oracle)}
        if cfg.has(sec, "omega") and value > 0:
            sub["unknown_pattern_limit"] = {
                str(n): lim.unknown_pattern_limit(n, sigma, m_min, cfg.get(sec, "omega", None, float), value) for n in ns}
        payload["incoherence"] = sub
    write_json(out / "limits.json", payload, info)
    print(f"limits: {len(rows)} rows, homogeneity drift {homog:.2e} -> {out}")
    return EXIT_OK


def cmd_quadrature(cfg: Config, out: Path, seed: int) -> int:
    info = meta(cfg, seed)
    sec = "quadrature"
    psf = _psf(cfg, sec, "psf_") if cfg.has(sec, "psf_kind") else Psf.sinc(cfg.get(sec, "psf_scale", 0.02, float))
    fam = _family(cfg)
    seq = _sequence(cfg, fam)
    Ms = _ints(cfg.get(sec, "m_values", [64, 128, 256, 512], list))
    Rs = cfg.get(sec, "r_values", [8.0, 16.0], list)
    k = cfg.get(sec, "points", 5, int)
    if min(Ms) < 2 or min(Rs) < 1 or len(Ms) < 2:
        raise ConfigError(f"{cfg.where(sec, 'm_values')}: need at least two M >= 2 and R >= 1")
    z = np.linspace(0.0, 1.0, k)
    studies = [quadrature_convergence(seq, psf, z, z, Ms, R) for R in Rs]
    rows = []
    for st in studies:
        rows += [[st.R, int(M), e, e * M, st.slope, st.constant] for M, e in zip(st.M, st.error)]
    write_csv(out / "quadrature.csv", ["R", "M", "error", "error_times_M", "slope", "constant"], rows, info)
    growth = [b.constant / a.constant for a, b in zip(studies, studies[1:])]
    write_json(out / "quadrature.json", {"studies": [s.to_dict() for s in studies], "constant_growth": growth}, info)
    print("quadrature: " + " ".join(f"R={s.R:g} slope={s.slope:.3f}" for s in studies)
          + (f" growth={growth}" if growth else ""))
    return EXIT_OK


COMMANDS = {
    "kernel": cmd_kernel,
    "stability": cmd_stability,
    "adversarial": cmd_adversarial,
    "limits": cmd_limits,
    "quadrature": cmd_quadrature,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="multillum", description="Multi-illumination imaging experiments.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="INI config file")
    p.add_argument("--out", help="output directory (default: runs/<command>)")
    p.add_argument("--seed", type=int, help="base seed; trial i uses seed XOR i")
    p.add_argument("--preset", choices=sorted(PRESETS), help="default configuration to start from")
    p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                   help="override a config key (repeatable)")
    return p


def load_config(args) -> Config:
    cfg = preset_config(args.preset or "sim")
    if args.config:
        cfg = cfg.merged(Config.read(args.config))
        if args.preset:
            cfg.set("run", "preset", args.preset)
            for s, kv in PRESETS[args.preset].items():
                for k, v in kv.items():
                    cfg.set(s, k, v)
    for item in args.set:
        key, sep, value = item.partition("=")
        section, dot, name = key.partition(".")
        if not (sep and dot and section and name):
            raise ConfigError(f"--set {item!r}: expected SECTION.KEY=VALUE")
        cfg.set(section.strip(), name.strip().lower(), value.strip())
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be nonnegative")
        cfg.set("run", "seed", args.seed)
    if args.out is not None:
        cfg.set("run", "out", args.out)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        seed = cfg.get("run", "seed", 0, int)
        out = Path(cfg.get("run", "out", f"runs/{args.command}"))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            return COMMANDS[args.command](cfg, out, seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (adv.ConditioningError, QuadratureError, NyquistError, CutoffError, FloatingPointError,
            np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
