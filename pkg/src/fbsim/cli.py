"""Command line front end: presets, free-form experiment runs, CSV/SVG output."""

from __future__ import annotations

import argparse
import configparser
import csv
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

from . import analytic
from .montecarlo import (
    ExperimentConfig,
    FeedbackBudgetError,
    feasible_b_values,
    find_bopt_empirical,
    run_point,
)

CSV_COLUMNS = ["scheme", "nt", "snr_db", "tfb", "b", "users",
               "mean_rate", "std_error", "trials", "extra"]


@dataclass(frozen=True)
class ResultRow:
    scheme: str
    nt: int
    snr_db: float
    tfb: int
    b: int
    users: int
    mean_rate: float
    std_error: float
    trials: int
    extra: float | None = None


@dataclass(frozen=True)
class Series:
    name: str
    xs: list[float]
    ys: list[float]


def write_csv(path: Path, rows: list[ResultRow]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in rows:
            w.writerow([
                r.scheme, r.nt, repr(r.snr_db), r.tfb, r.b, r.users,
                repr(r.mean_rate), repr(r.std_error), r.trials,
                "" if r.extra is None else repr(r.extra),
            ])


def read_csv(path: Path) -> list[ResultRow]:
    rows = []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        for d in reader:
            rows.append(ResultRow(
                scheme=d["scheme"], nt=int(d["nt"]), snr_db=float(d["snr_db"]),
                tfb=int(d["tfb"]), b=int(d["b"]), users=int(d["users"]),
                mean_rate=float(d["mean_rate"]), std_error=float(d["std_error"]),
                trials=int(d["trials"]),
                extra=None if d["extra"] == "" else float(d["extra"]),
            ))
    return rows


_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def write_svg(path: Path, series: list[Series], title: str,
              xlabel: str, ylabel: str) -> None:
    """Minimal standalone SVG line chart (one polyline per series)."""
    width, height = 720, 480
    ml, mr, mt, mb = 70, 170, 40, 55
    pw, ph = width - ml - mr, height - mt - mb
    xs_all = [x for s in series for x in s.xs]
    ys_all = [y for s in series for y in s.ys]
    x0, x1 = min(xs_all), max(xs_all)
    y0, y1 = min(ys_all), max(ys_all)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    def px(x):
        return ml + pw * (x - x0) / (x1 - x0)

    def py(y):
        return mt + ph * (1.0 - (y - y0) / (y1 - y0))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{ml + pw / 2:.1f}" y="22" text-anchor="middle" font-size="15">{title}</text>',
        f'<line x1="{ml}" y1="{mt + ph}" x2="{ml + pw}" y2="{mt + ph}" stroke="black"/>',
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{mt + ph}" stroke="black"/>',
        f'<text x="{ml + pw / 2:.1f}" y="{height - 12}" text-anchor="middle" font-size="13">{xlabel}</text>',
        f'<text x="18" y="{mt + ph / 2:.1f}" text-anchor="middle" font-size="13" '
        f'transform="rotate(-90 18 {mt + ph / 2:.1f})">{ylabel}</text>',
    ]
    for i in range(5):
        xv = x0 + i * (x1 - x0) / 4
        yv = y0 + i * (y1 - y0) / 4
        parts.append(f'<line x1="{px(xv):.1f}" y1="{mt + ph}" x2="{px(xv):.1f}" '
                     f'y2="{mt + ph + 5}" stroke="black"/>')
        parts.append(f'<text x="{px(xv):.1f}" y="{mt + ph + 20}" text-anchor="middle" '
                     f'font-size="11">{xv:.3g}</text>')
        parts.append(f'<line x1="{ml - 5}" y1="{py(yv):.1f}" x2="{ml}" '
                     f'y2="{py(yv):.1f}" stroke="black"/>')
        parts.append(f'<text x="{ml - 8}" y="{py(yv) + 4:.1f}" text-anchor="end" '
                     f'font-size="11">{yv:.3g}</text>')
    for i, s in enumerate(series):
        color = _PALETTE[i % len(_PALETTE)]
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in sorted(zip(s.xs, s.ys)))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.8"/>')
        for x, y in zip(s.xs, s.ys):
            parts.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="2.6" fill="{color}"/>')
        ly = mt + 16 + 18 * i
        parts.append(f'<line x1="{ml + pw + 10}" y1="{ly}" x2="{ml + pw + 34}" y2="{ly}" '
                     f'stroke="{color}" stroke-width="1.8"/>')
        parts.append(f'<text x="{ml + pw + 40}" y="{ly + 4}" font-size="11">{s.name}</text>')
    parts.append("</svg>")
    path.write_text("\n".join(parts) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# presets

ZF_B_GRID_300 = (5, 6, 10, 12, 15, 20, 25, 30)
PU2RC_B_GRID_300 = (2, 3, 4, 5, 6, 10, 12)


def _zf_cfg(seed, trials, **kw):
    base = dict(scheme="zf", nt=4, snr_db=10.0, tfb=300, seed=seed, trials=trials)
    base.update(kw)
    return ExperimentConfig(**base)


def _sweep_rows(cfg, extra_fn=None):
    rows, xs, ys = [], [], []
    for i, b in enumerate(cfg.b_values or feasible_b_values(cfg)):
        est = run_point(cfg, b, stream_offset=i * cfg.trials)
        extra = extra_fn(cfg, b) if extra_fn else None
        rows.append(ResultRow(cfg.scheme, cfg.nt, cfg.snr_db, cfg.tfb, b, est.users,
                              est.mean, est.std_error, est.trials, extra))
        xs.append(b)
        ys.append(est.mean)
    return rows, xs, ys


def preset_tab_intro_example(seed, trials):
    cfg = _zf_cfg(seed, trials, tfb=100, b_values=(4, 10, 20))
    rows, xs, ys = _sweep_rows(cfg)
    return rows, [Series("ZF, Nt=4, 10 dB, Tfb=100", xs, ys)], "bits per user B", "sum rate (bps/Hz)"


def preset_fig2_zf_sweep(seed, trials):
    rows, series = [], []
    for nt, snr_db in ((4, 10.0), (4, 5.0), (2, 10.0)):
        cfg = _zf_cfg(seed, trials, nt=nt, snr_db=snr_db, b_values=ZF_B_GRID_300)
        r, xs, ys = _sweep_rows(cfg)
        rows += r
        series.append(Series(f"ZF, Nt={nt}, {snr_db:g} dB", xs, ys))
    return rows, series, "bits per user B", "sum rate (bps/Hz)"


def preset_fig3_penalty(seed, trials):
    def penalty(cfg, b):
        return analytic.zf_penalty_approx(analytic.AnalyticParams(cfg.snr, cfg.nt, cfg.tfb, b))

    cfg = _zf_cfg(seed, trials, b_values=ZF_B_GRID_300)
    rows, xs, ys = _sweep_rows(cfg, extra_fn=penalty)
    cfg_p = replace(cfg, quantizer="perfect")
    rows_p, xs_p, ys_p = _sweep_rows(cfg_p)
    rows += rows_p
    series = [
        Series("quantized CSI", xs, ys),
        Series("perfect CSI, same users", xs_p, ys_p),
        Series("analytic penalty", xs, [r.extra for r in rows[: len(xs)]]),
    ]
    return rows, series, "bits per user B", "sum rate (bps/Hz)"


def _bopt_rows(seed, trials, axis_values, axis_name):
    rows, series = [], []
    for nt in (2, 4):
        xs, emp, appr = [], [], []
        for v in axis_values:
            kw = {axis_name: v, "nt": nt}
            cfg = _zf_cfg(seed, trials, **kw)
            # keep the sweep around the peak region; very small B is costly and never optimal
            cfg = replace(cfg, b_values=tuple(b for b in feasible_b_values(cfg) if 4 <= b <= 40))
            b_opt, est, _ = find_bopt_empirical(cfg, common_streams=True)
            approx = analytic.zf_bopt_lambert(cfg.snr, cfg.nt, cfg.tfb)
            rows.append(ResultRow(cfg.scheme, cfg.nt, cfg.snr_db, cfg.tfb, b_opt, est.users,
                                  est.mean, est.std_error, est.trials, approx))
            xs.append(v)
            emp.append(b_opt)
            appr.append(approx)
        series.append(Series(f"empirical B_opt, Nt={nt}", xs, emp))
        series.append(Series(f"Lambert-W B_opt, Nt={nt}", xs, appr))
    return rows, series


def preset_fig4_bopt_vs_tfb(seed, trials):
    rows, series = _bopt_rows(seed, trials, (100, 200, 300, 500), "tfb")
    return rows, series, "feedback budget T_fb (bits)", "optimal B (bits)"


def preset_fig5_bopt_vs_snr(seed, trials):
    rows, series = _bopt_rows(seed, trials, (0.0, 5.0, 10.0, 15.0), "snr_db")
    return rows, series, "SNR (dB)", "optimal B (bits)"


def preset_fig6_pu2rc_sweep(seed, trials):
    cfg = _zf_cfg(seed, trials, scheme="pu2rc", b_values=PU2RC_B_GRID_300)
    rows, xs, ys = _sweep_rows(cfg)
    return rows, [Series("PU2RC, Nt=4, 10 dB", xs, ys)], "bits per user B", "sum rate (bps/Hz)"


def preset_fig7_zf_vs_pu2rc(seed, trials):
    rows, series = [], []
    for scheme, grid in (("zf", ZF_B_GRID_300), ("pu2rc", PU2RC_B_GRID_300)):
        xs, ys = [], []
        for snr_db in (0.0, 5.0, 10.0):
            cfg = _zf_cfg(seed, trials, scheme=scheme, snr_db=snr_db, b_values=grid)
            b_opt, est, _ = find_bopt_empirical(cfg, common_streams=True)
            rows.append(ResultRow(scheme, cfg.nt, snr_db, cfg.tfb, b_opt, est.users,
                                  est.mean, est.std_error, est.trials, None))
            xs.append(snr_db)
            ys.append(est.mean)
        series.append(Series(f"optimized {scheme.upper()}", xs, ys))
    return rows, series, "SNR (dB)", "sum rate at optimal B (bps/Hz)"


def preset_fig8_vs_nt(seed, trials):
    rows, series = [], []
    for scheme in ("zf", "pu2rc"):
        xs, ys = [], []
        for nt in (2, 4):
            cfg = _zf_cfg(seed, trials, scheme=scheme, nt=nt, tfb=500)
            hi = 12 if scheme == "pu2rc" else 40
            cfg = replace(cfg, b_values=tuple(b for b in feasible_b_values(cfg) if 4 <= b <= hi))
            b_opt, est, _ = find_bopt_empirical(cfg, common_streams=True)
            rows.append(ResultRow(scheme, nt, cfg.snr_db, cfg.tfb, b_opt, est.users,
                                  est.mean, est.std_error, est.trials, None))
            xs.append(nt)
            ys.append(est.mean)
        series.append(Series(f"optimized {scheme.upper()}", xs, ys))
    return rows, series, "transmit antennas Nt", "sum rate at optimal B (bps/Hz)"


def preset_fig9_selection_cqi(seed, trials):
    grid = (10, 12, 15, 20, 25, 30)
    rows, series = [], []
    for label, kw in (
        ("greedy, norm CQI", dict(selection="greedy", cqi_kind="norm2")),
        ("greedy, SINR CQI", dict(selection="greedy", cqi_kind="expected_sinr")),
        ("simplified, norm CQI", dict(selection="simplified", cqi_kind="norm2")),
    ):
        cfg = _zf_cfg(seed, trials, b_values=grid, **kw)
        r, xs, ys = _sweep_rows(cfg)
        rows += r
        series.append(Series(label, xs, ys))
    return rows, series, "bits per user B", "sum rate (bps/Hz)"


def preset_fig10_quantizers(seed, trials):
    grid = (10, 12, 15, 20, 25, 30)
    rows, series = [], []
    for quant in ("rvq_statistical", "scalar", "idealized"):
        cfg = _zf_cfg(seed, trials, b_values=grid, quantizer=quant)
        r, xs, ys = _sweep_rows(cfg)
        rows += r
        series.append(Series(quant, xs, ys))
    return rows, series, "bits per user B", "sum rate (bps/Hz)"


def preset_fig11_subf(seed, trials):
    grid = (5, 6, 10, 12, 15, 20, 25, 30)
    rows, series = [], []
    for snr_db in (0.0, 5.0):
        def overlay(cfg, b, _snr=None):
            return analytic.subf_rate_approx(cfg.snr, cfg.nt, cfg.tfb, b)

        cfg = _zf_cfg(seed, trials, scheme="subf", snr_db=snr_db, b_values=grid)
        r, xs, ys = _sweep_rows(cfg, extra_fn=overlay)
        rows += r
        series.append(Series(f"SUBF, {snr_db:g} dB", xs, ys))
        series.append(Series(f"approximation, {snr_db:g} dB", xs, [row.extra for row in r]))
    return rows, series, "bits per user B", "rate (bps/Hz)"


PRESETS = {
    "tab_intro_example": preset_tab_intro_example,
    "fig2_zf_sweep": preset_fig2_zf_sweep,
    "fig3_penalty": preset_fig3_penalty,
    "fig4_bopt_vs_tfb": preset_fig4_bopt_vs_tfb,
    "fig5_bopt_vs_snr": preset_fig5_bopt_vs_snr,
    "fig6_pu2rc_sweep": preset_fig6_pu2rc_sweep,
    "fig7_zf_vs_pu2rc": preset_fig7_zf_vs_pu2rc,
    "fig8_vs_nt": preset_fig8_vs_nt,
    "fig9_selection_cqi": preset_fig9_selection_cqi,
    "fig10_quantizers": preset_fig10_quantizers,
    "fig11_subf": preset_fig11_subf,
}


def run_preset(name: str, seed: int, trials: int, out_dir: Path) -> tuple[Path, Path]:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    rows, series, xlabel, ylabel = PRESETS[name](seed, trials)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{name}.csv"
    svg_path = out_dir / f"{name}.svg"
    write_csv(csv_path, rows)
    write_svg(svg_path, series, title=name, xlabel=xlabel, ylabel=ylabel)
    return csv_path, svg_path


# ---------------------------------------------------------------------------
# free-form configs

class ConfigError(ValueError):
    pass


_CONFIG_FIELDS = {f.name: f.type for f in fields(ExperimentConfig)}


def _coerce(key: str, raw: str):
    if key == "b_values":
        return tuple(int(v) for v in raw.replace(",", " ").split())
    if key in ("scheme", "quantizer", "cqi_kind", "selection"):
        return raw
    if key in ("relaxed_user_grid",):
        return raw.lower() in ("1", "true", "yes", "on")
    if key in ("snr_db", "r", "beta"):
        return float(raw)
    return int(raw)


def load_config(path: Path, overrides: dict[str, str]) -> ExperimentConfig:
    parser = configparser.ConfigParser()
    try:
        read = parser.read(path)
    except configparser.Error as e:
        raise ConfigError(f"{path}: {e}") from e
    if not read:
        raise ConfigError(f"config file not found: {path}")
    if not parser.has_section("experiment"):
        raise ConfigError(f"{path}: missing [experiment] section")
    values = {}
    for key, raw in parser.items("experiment"):
        key = key.replace("-", "_")
        if key not in _CONFIG_FIELDS:
            raise ConfigError(f"{path}: unknown key {key!r} in [experiment]")
        values[key] = raw
    values.update({k.replace("-", "_"): v for k, v in overrides.items()})
    try:
        kwargs = {k: _coerce(k, v) for k, v in values.items()}
        return ExperimentConfig(**kwargs)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{path}: {e}") from e


def run_config(path: Path, overrides: dict[str, str], out_dir: Path) -> tuple[Path, Path]:
    cfg = load_config(path, overrides)
    rows, xs, ys = _sweep_rows(cfg)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(path).stem
    csv_path = out_dir / f"{stem}.csv"
    svg_path = out_dir / f"{stem}.svg"
    write_csv(csv_path, rows)
    write_svg(svg_path, [Series(f"{cfg.scheme}, Nt={cfg.nt}, {cfg.snr_db:g} dB", xs, ys)],
              title=stem, xlabel="bits per user B", ylabel="rate (bps/Hz)")
    return csv_path, svg_path


def _parse_overrides(pairs: list[str]) -> dict[str, str]:
    if len(pairs) % 2 != 0:
        raise ConfigError("overrides must come in --key value pairs")
    out = {}
    for key, value in zip(pairs[0::2], pairs[1::2]):
        if not key.startswith("--"):
            raise ConfigError(f"expected an option starting with '--', got {key!r}")
        out[key[2:]] = value
    return out


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="fbsim",
                                     description="feedback-budget sum rate simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_preset = sub.add_parser("preset", help="run a named figure/table preset")
    p_preset.add_argument("name")
    p_preset.add_argument("--seed", type=int, default=0)
    p_preset.add_argument("--trials", type=int, default=2000)
    p_preset.add_argument("--out", type=Path, default=Path("results"))

    p_run = sub.add_parser("run", help="run an experiment config file")
    p_run.add_argument("config", type=Path)
    p_run.add_argument("--out", type=Path, default=Path("results"))
    p_run.add_argument("overrides", nargs=argparse.REMAINDER,
                       help="--key value pairs overriding config entries")

    args = parser.parse_args(argv)
    try:
        if args.command == "preset":
            csv_path, svg_path = run_preset(args.name, args.seed, args.trials, args.out)
        else:
            overrides = _parse_overrides(args.overrides)
            out_dir = Path(overrides.pop("out", args.out))
            csv_path, svg_path = run_config(args.config, overrides, out_dir)
    except (ConfigError, FeedbackBudgetError, ValueError) as e:
        print(f"fbsim: config error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"fbsim: io error: {e}", file=sys.stderr)
        return 3
    print(csv_path)
    print(svg_path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
