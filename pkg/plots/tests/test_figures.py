import json

import pytest

from detectlab_plots import FigureRecipe, plot


def _write_time_series(path, scale):
    rows = ["t,norm_sq,rho_T_norm,rho_T_flux,rho_T_pointwise"]
    for i in range(40):
        t = 0.25 * i
        rho = scale * t * 2.718281828 ** (-t)
        rows.append(f"{t},{1.0 - 0.1 * scale * t},{rho},,")
    path.write_text("\n".join(rows) + "\n")


def _write_sweep(path, report_path):
    params = [10.0, 100.0, 1000.0, 10000.0, 100000.0]
    errors = [2.0e-2 / (p / 10.0) ** 0.9998 for p in params]
    rows = ["parameter,error,abs_c"]
    for p, e in zip(params, errors):
        rows.append(f"{p},{e},{0.333 + e}")
    path.write_text("\n".join(rows) + "\n")
    report_path.write_text(
        json.dumps(
            {
                "name": "ck",
                "parameter_name": "v",
                "parameters": params,
                "errors": errors,
                "slope": -0.9998,
                "slope_residual": 1.2e-9,
                "verdict": "converging",
            }
        )
    )


def _write_eigen(path):
    rows = ["k,re_c,im_c,R,A,re_lambda,im_lambda,abs_a,abs_b"]
    for i in range(1, 30):
        k = 0.1 * i
        R = ((k - 1.0) / (k + 1.0)) ** 2
        rows.append(f"{k},{(k - 1.0) / (k + 1.0)},0.0,{R},{1.0 - R},,,,")
    path.write_text("\n".join(rows) + "\n")


def _write_spectrum(path):
    rows = ["re_k,im_k,re_E,mu,residual"]
    for re_k, im_k, mu in [
        (0.82, -0.27, 0.22),
        (1.55, -0.23, 0.36),
        (2.51, -0.13, 0.34),
        (3.50, -0.09, 0.33),
    ]:
        rows.append(f"{re_k},{im_k},{(re_k * re_k - im_k * im_k) / 2.0},{mu},1e-12")
    path.write_text("\n".join(rows) + "\n")


def _render_twice(recipe_a, recipe_b):
    meta = plot(recipe_a)
    plot(recipe_b)
    blob_a = open(recipe_a.output, "rb").read()
    blob_b = open(recipe_b.output, "rb").read()
    return meta, blob_a, blob_b


def test_overlay_four_labeled_curves(tmp_path):
    paths = []
    for i, scale in enumerate((0.6, 0.8, 0.9, 1.0)):
        p = tmp_path / f"series_{i}.csv"
        _write_time_series(p, scale)
        paths.append(str(p))
    recipe = FigureRecipe(
        kind="overlay",
        inputs=tuple(paths),
        output=str(tmp_path / "overlay.png"),
        x="t",
        y=("rho_T_norm",),
        labels=("v=10", "v=40", "v=160", "hard"),
        title="arrival densities",
    )
    meta = plot(recipe)
    assert meta["n_curves"] == 4
    assert meta["format"] == "png"
    assert (tmp_path / "overlay.png").stat().st_size > 0


def test_overlay_regenerates_byte_identically(tmp_path):
    p = tmp_path / "series.csv"
    _write_time_series(p, 1.0)
    recipes = [
        FigureRecipe(
            kind="overlay",
            inputs=(str(p),),
            output=str(tmp_path / name),
            x="t",
            y=("rho_T_norm",),
        )
        for name in ("a.png", "b.png")
    ]
    _, blob_a, blob_b = _render_twice(*recipes)
    assert blob_a == blob_b


def test_loglog_annotates_report_slope(tmp_path):
    sweep = tmp_path / "sweep_ck.csv"
    report = tmp_path / "sweep_ck_report.json"
    _write_sweep(sweep, report)
    recipes = [
        FigureRecipe(
            kind="loglog",
            inputs=(str(sweep), str(report)),
            output=str(tmp_path / name),
            x="parameter",
            y=("error",),
        )
        for name in ("a.svg", "b.svg")
    ]
    meta, blob_a, blob_b = _render_twice(*recipes)
    assert blob_a == blob_b
    expected = json.loads(report.read_text())["slope"]
    assert abs(meta["slope"] - expected) <= 1e-3
    # the annotation text itself carries the report's slope
    assert f"slope = {expected:.4f}" in blob_a.decode()


def test_curve_two_columns(tmp_path):
    eigen = tmp_path / "eigen_modes.csv"
    _write_eigen(eigen)
    recipes = [
        FigureRecipe(
            kind="curve",
            inputs=(str(eigen),),
            output=str(tmp_path / name),
            x="k",
            y=("R", "A"),
            ylabel="reflection / absorption",
        )
        for name in ("a.png", "b.png")
    ]
    meta, blob_a, blob_b = _render_twice(*recipes)
    assert blob_a == blob_b
    assert meta["n_curves"] == 2
    assert 0.0 <= meta["y_min"] and meta["y_max"] <= 1.0


def test_scatter_energy_plane_below_real_axis(tmp_path):
    spectrum = tmp_path / "spectrum.csv"
    _write_spectrum(spectrum)
    recipes = [
        FigureRecipe(
            kind="scatter",
            inputs=(str(spectrum),),
            output=str(tmp_path / name),
            x="re_E",
            y=("-mu",),
            ylabel="Im E",
        )
        for name in ("a.png", "b.png")
    ]
    meta, blob_a, blob_b = _render_twice(*recipes)
    assert blob_a == blob_b
    assert meta["y_max"] < 0.0


def test_unknown_column_is_an_error(tmp_path):
    eigen = tmp_path / "eigen_modes.csv"
    _write_eigen(eigen)
    recipe = FigureRecipe(
        kind="curve",
        inputs=(str(eigen),),
        output=str(tmp_path / "x.png"),
        x="k",
        y=("RR",),
    )
    with pytest.raises(ValueError, match="RR"):
        plot(recipe)


def test_empty_column_is_an_error(tmp_path):
    eigen = tmp_path / "eigen_modes.csv"
    _write_eigen(eigen)  # lambda columns are present but empty
    recipe = FigureRecipe(
        kind="curve",
        inputs=(str(eigen),),
        output=str(tmp_path / "x.png"),
        x="k",
        y=("re_lambda",),
    )
    with pytest.raises(ValueError, match="no usable rows"):
        plot(recipe)


def test_missing_file_is_an_error(tmp_path):
    recipe = FigureRecipe(
        kind="curve",
        inputs=(str(tmp_path / "nope.csv"),),
        output=str(tmp_path / "x.png"),
        x="k",
        y=("R",),
    )
    with pytest.raises(FileNotFoundError):
        plot(recipe)


def test_recipe_validation():
    with pytest.raises(ValueError, match="kind"):
        FigureRecipe(kind="pie", inputs=("a.csv",), output="x.png", x="t", y=("n",))
    with pytest.raises(ValueError, match="png or .svg"):
        FigureRecipe(kind="curve", inputs=("a.csv",), output="x.pdf", x="t", y=("n",))
    with pytest.raises(ValueError, match="labels"):
        FigureRecipe(
            kind="curve", inputs=("a.csv",), output="x.png", x="t", y=("n",),
            labels=("one", "two"),
        )
    with pytest.raises(ValueError, match="input"):
        FigureRecipe(kind="curve", inputs=(), output="x.png", x="t", y=("n",))
