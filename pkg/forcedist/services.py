from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence, TypeVar

import numpy as np

from .characterization import (
    average_specimens,
    curve_from_inflation,
    curve_from_tension,
    friction_from_tilt,
    read_curve_csv,
    read_inflation_csv,
    read_tension_csv,
    write_curve_csv,
)
from .config import PipelineConfig, load_config, with_seed
from .constitutive import composite_modulus, eshelby_ratio, resolve_material, young_modulus
from .domain import SCHEMA_VERSION, LoadCase, StressStretchCurve
from .errors import ConfigurationError, InputError, PairingError
from .fitting import FitProblem, FitResult, fit, model_curves
from .flowfeat.dis import dense_flow
from .flowfeat.images import GrayImage, quantize, read_image, write_image
from .flowfeat.io import read_features_csv, write_features_csv, write_flow
from .flowfeat.pooling import FeatureVector, pool_features
from .flowfeat.render import IndentationDisplacement, random_scene, render_scene
from .labeling.agreement import agreement_report, synthetic_readings
from .labeling.binning import ForceDistributionLabel, bin_forces, label_ranges, total_force
from .labeling.io import (
    read_forces_csv,
    read_ft_csv,
    read_mesh_csv,
    read_metadata_csv,
    write_forces_csv,
    write_ft_csv,
    write_labels,
    write_mesh_csv,
    write_metadata_csv,
)
from .labeling.mesh import BinGrid, Rect, regular_mesh
from .labeling.synthetic import contact_radius, synth_indentation
from .learning.checkpoint import TrainedModel, load_model, predict, save_model
from .learning.dataset import Dataset, DatasetRecord, read_dataset, write_dataset
from .learning.metrics import EvalReport, evaluate
from .learning.training import train
from .log import logger
from .seeds import stage_rng
from .storage import format_float, write_csv, write_json

CONSERVATION_TOLERANCE_N = 1e-12
T = TypeVar("T")
R = TypeVar("R")


@dataclass(frozen=True)
class RunOptions:
    config_path: Path | None = None
    seed: int | None = None
    threads: int = 1
    out: Path | None = None
    overrides: tuple[str, ...] = ()


@dataclass(frozen=True)
class CommandResult:
    """Summary rows for the console plus the files a command wrote."""

    title: str
    rows: list[tuple[str, str]]
    written: list[Path] = field(default_factory=list)
    report: dict[str, Any] = field(default_factory=dict)


class PipelineService:
    def __init__(self, config: PipelineConfig, *, threads: int = 1, out: Path | None = None):
        if threads < 1:
            raise ConfigurationError("threads must be >= 1")
        self.config = config
        self.threads = threads
        self.out = Path(out) if out is not None else Path(config.paths.out_dir)

    @classmethod
    def default(cls, options: RunOptions | None = None) -> "PipelineService":
        options = options or RunOptions()
        config = with_seed(load_config(options.config_path, options.overrides), options.seed)
        return cls(config, threads=options.threads, out=options.out)

    def report_header(self) -> dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "seed": self.config.seed,
            "config_hash": self.config.hash(),
        }

    def data_path(self, path: Path | str) -> Path:
        """Relative input paths resolve against ``paths.data_dir``."""
        path = Path(path)
        return path if path.is_absolute() else Path(self.config.paths.data_dir) / path

    def cmd_fit(self, curve_specs: Sequence[str], order: int | None = None) -> CommandResult:
        if not curve_specs:
            raise InputError("fit needs at least one CASE:PATH curve file")
        curves = [self._read_curve_spec(spec) for spec in curve_specs]
        problem = FitProblem(tuple(curves), order=order if order is not None else self.config.fit.order)
        result: FitResult = fit(problem, self.config.fit_config(self.threads))

        written = []
        for index, curve in enumerate(model_curves(result.params, problem)):
            name = f"model_{index}_{curve.case.value}.csv"
            written.append(write_curve_csv(curve, self.out / name))
        report = {
            **self.report_header(),
            "order": problem.order,
            "curves": [
                {"label": curve.label, "case": curve.case.value, "samples": len(curve)}
                for curve in curves
            ],
            "result": result.to_data(),
            "young_modulus_kpa": young_modulus(result.params),
        }
        written.append(write_json(self.out / "fit.json", report))
        rows = [
            ("order", str(problem.order)),
            ("objective_kpa2", f"{result.objective:.6g}"),
            ("converged", str(result.converged).lower()),
            ("starts_used", str(result.starts_used)),
        ]
        rows.extend(
            (f"term_{k}", f"mu={term.mu_kpa:.6g} kPa alpha={term.alpha:.6g}")
            for k, term in enumerate(result.params.terms)
        )
        rows.extend(
            (f"rms_{curve.label or k}", f"{rms:.6g} kPa")
            for k, (curve, rms) in enumerate(zip(curves, result.per_curve_rms))
        )
        return CommandResult("fdist fit", rows, written, report)

    def cmd_characterize(
        self,
        kind: str,
        inputs: Sequence[Path],
        case: str = "UA",
        average: bool = False,
        tilt_deg: float | None = None,
    ) -> CommandResult:
        rows: list[tuple[str, str]] = []
        written: list[Path] = []
        if tilt_deg is not None:
            friction = friction_from_tilt(math.radians(tilt_deg))
            rows.append(("friction_mu0", f"{friction.mu0:.6g}"))
        if inputs:
            curves = self._characterize(kind, inputs, case)
            for path, curve in zip(inputs, curves):
                written.append(write_curve_csv(curve, self.out / f"{Path(path).stem}_curve.csv"))
                rows.append((curve.label, f"{len(curve)} samples, {curve.case.value}"))
            if average:
                mean = average_specimens(curves)
                written.append(write_curve_csv(mean, self.out / f"average_{mean.case.value}.csv"))
                rows.append(("average", f"{len(mean)} samples"))
        elif tilt_deg is None:
            raise InputError("characterize needs raw CSV files or --tilt-deg")
        return CommandResult("fdist characterize", rows, written)

    def cmd_material(self, reference: str | None = None, phi: float | None = None) -> CommandResult:
        params = resolve_material(reference or self.config.material.reference)
        fraction = self.config.material.phi if phi is None else phi
        modulus = young_modulus(params)
        rows = [("material", params.material or str(reference))]
        rows.extend(
            (f"term_{k}", f"mu={term.mu_kpa:.6g} kPa alpha={term.alpha:.6g}")
            for k, term in enumerate(params.terms)
        )
        rows.extend(
            [
                ("young_modulus_kpa", f"{modulus:.4f}"),
                ("phi", f"{fraction:g}"),
                ("eshelby_ratio", f"{eshelby_ratio(fraction).ratio:.4f}"),
                ("composite_modulus_kpa", f"{composite_modulus(params, fraction):.4f}"),
            ]
        )
        return CommandResult("fdist material", rows)

    def cmd_label(
        self,
        mesh_path: Path,
        forces_path: Path,
        metadata_path: Path | None = None,
        grid_spec: str | None = None,
        ft_path: Path | None = None,
    ) -> CommandResult:
        grid = self._grid(grid_spec)
        mesh = read_mesh_csv(self.data_path(mesh_path), grid.extent)
        metadata = read_metadata_csv(self.data_path(metadata_path)) if metadata_path else None
        fields = read_forces_csv(self.data_path(forces_path), metadata)
        if metadata is not None:
            _require_same_ids({f.indentation_id for f in fields}, set(metadata), "metadata")
        labels = self._map(lambda f: bin_forces(f, mesh, grid), fields)

        worst = 0.0
        for f, label in zip(fields, labels):
            by_nodes, by_bins = total_force(f).as_tuple(), total_force(label).as_tuple()
            worst = max(worst, *(abs(a - b) for a, b in zip(by_nodes, by_bins)))
        report: dict[str, Any] = {
            **self.report_header(),
            "grid": grid.to_data(),
            "count": len(labels),
            "conservation": {
                "max_abs_difference_n": worst,
                "passed": worst <= CONSERVATION_TOLERANCE_N,
            },
        }
        if labels:
            report["ranges"] = label_ranges(labels).to_data()
        rows = [
            ("indentations", str(len(labels))),
            ("grid", f"{grid.rows}x{grid.cols} bins of {grid.bin_side:g} mm"),
            ("conservation", f"max |diff| {worst:.3g} N"),
        ]
        if ft_path is not None:
            readings = read_ft_csv(self.data_path(ft_path), self.config.synth.ft_resolution)
            agreement = agreement_report(labels, readings)
            report["agreement"] = agreement.to_data()
            rows.extend(
                (f"rmse_gt_{axis}", f"{value:.4g} N")
                for axis, value in agreement.rmse_gt.to_data().items()
            )
        csv_path, manifest_path = write_labels(
            labels, grid, self.out / "labels.csv", self.out / "labels.json"
        )
        report_path = write_json(self.out / "label_report.json", report)
        return CommandResult("fdist label", rows, [csv_path, manifest_path, report_path], report)

    def cmd_features(
        self,
        ref_path: Path,
        cur_path: Path,
        regions: str | None = None,
        dump_flow: bool = False,
    ) -> CommandResult:
        rows_count, cols_count = self._regions(regions)
        ref, cur = read_image(self.data_path(ref_path)), read_image(self.data_path(cur_path))
        if ref.shape != cur.shape:
            raise InputError(
                f"image sizes differ: {ref.width}x{ref.height} vs {cur.width}x{cur.height}"
            )
        flow = dense_flow(ref, cur, self.config.flow.flow_config())
        features = pool_features(flow, rows_count, cols_count)
        written = [write_features_csv(features, self.out / "features.csv")]
        if dump_flow:
            written.append(write_flow(flow, self.out / "flow.bin"))
        rows = [
            ("regions", f"{rows_count}x{cols_count}"),
            ("mean_magnitude_px", f"{float(np.mean(features.magnitudes)):.4f}"),
            ("max_magnitude_px", f"{float(np.max(features.magnitudes)):.4f}"),
        ]
        return CommandResult("fdist features", rows, written)

    def cmd_synth(self, write_images: bool = True) -> CommandResult:
        config, synth = self.config, self.config.synth
        grid = self.config.bin_grid()
        extent = grid.extent
        rows_count, cols_count = self._regions(None)
        metas = synth_centers(extent, synth.spacing_mm, synth.margin_mm, synth.depths_mm)
        mesh = regular_mesh(extent, synth.mesh_spacing_mm)
        logger.info(f"synthesizing {len(metas)} indentations on a {len(mesh)}-node mesh")

        fields = [
            synth_indentation(
                mesh,
                (cx, cy),
                depth,
                synth.indenter_radius_mm,
                synth.stiffness,
                friction=synth.friction,
                indentation_id=key,
            )
            for key, cx, cy, depth in metas
        ]
        labels = [bin_forces(f, mesh, grid) for f in fields]
        readings = synthetic_readings(labels, synth.ft_resolution, stage_rng(config.seed, "synth.ft"))

        scale = (synth.frame_px - 1) / extent.width
        margin_px = synth.gain_px_per_mm * max(synth.depths_mm) + 1.0
        layout = random_scene(
            synth.frame_px,
            synth.frame_px,
            synth.particles,
            synth.particle_radius_px,
            stage_rng(config.seed, "synth.particles"),
            margin=margin_px,
        )
        ref = quantize(render_scene(layout)[0])
        flow_config = config.flow.flow_config()

        def features_for(meta: tuple[str, float, float, float]) -> tuple[FeatureVector, GrayImage]:
            _, cx, cy, depth = meta
            field_px = IndentationDisplacement(
                cx=(cx - extent.x0) * scale,
                cy=(cy - extent.y0) * scale,
                depth_mm=depth,
                contact_radius_px=max(contact_radius(depth, synth.indenter_radius_mm) * scale, 1.0),
                gain_px_per_mm=synth.gain_px_per_mm,
            )
            cur = quantize(render_scene(layout.with_field(field_px))[1])
            flow = dense_flow(ref, cur, flow_config)
            return pool_features(flow, rows_count, cols_count), cur

        computed = self._map(features_for, metas)
        records = tuple(
            DatasetRecord(label.indentation_id, features.values, label.packed)
            for label, (features, _) in zip(labels, computed)
        )
        dataset = Dataset(
            m=rows_count * cols_count,
            n=grid.n,
            records=records,
            grid=grid,
            regions=(rows_count, cols_count),
        )

        out = self.out
        written = [
            write_mesh_csv(mesh, out / "mesh.csv"),
            write_metadata_csv([f.meta for f in fields if f.meta is not None], out / "metadata.csv"),
            write_forces_csv(fields, out / "forces.csv"),
            write_ft_csv(readings, out / "ft.csv"),
            *write_labels(labels, grid, out / "labels.csv", out / "labels.json"),
            write_dataset(dataset, out / "dataset.json"),
        ]
        if write_images:
            written.append(write_image(ref, out / "images" / "ref.png"))
            for (key, *_), (_, cur) in zip(metas, computed):
                written.append(write_image(cur, out / "images" / f"{key}.png"))
        report = {
            **self.report_header(),
            "records": len(records),
            "mesh_nodes": len(mesh),
            "grid": grid.to_data(),
            "regions": [rows_count, cols_count],
            "ranges": label_ranges(labels).to_data(),
        }
        written.append(write_json(out / "synth_report.json", report))
        rows = [
            ("records", str(len(records))),
            ("mesh_nodes", str(len(mesh))),
            ("bins", f"{grid.rows}x{grid.cols}"),
            ("regions", f"{rows_count}x{cols_count}"),
            ("output", str(out)),
        ]
        return CommandResult("fdist synth", rows, written, report)

    def cmd_train(self, dataset_path: Path) -> CommandResult:
        dataset = read_dataset(self.data_path(dataset_path))
        self._check_dataset(dataset)
        train_config = self.config.train_config()
        result = train(dataset, train_config)
        model = TrainedModel(
            params=result.params,
            standardizer=result.standardizer,
            config=train_config,
            m=dataset.m,
            n=dataset.n,
            extra={
                "seed": self.config.seed,
                "config_hash": self.config.hash(),
                "train_ids": list(result.train_ids),
                "test_ids": list(result.test_ids),
            },
        )
        checkpoint, sidecar = save_model(model, self.out / "model.mlp")
        history = write_csv(
            self.out / "loss_history.csv",
            ("epoch", "train_mse", "test_mse"),
            (
                (
                    str(epoch),
                    format_float(loss),
                    format_float(result.test_loss[epoch - 1]) if result.test_loss else "",
                )
                for epoch, loss in enumerate(result.train_loss, start=1)
            ),
        )
        report: dict[str, Any] = {
            **self.report_header(),
            "records": len(dataset),
            "train_records": len(result.train_ids),
            "test_records": len(result.test_ids),
            "final_train_mse": result.train_loss[-1] if result.train_loss else None,
            "final_test_mse": result.test_loss[-1] if result.test_loss else None,
        }
        if result.test_ids:
            test_set = _subset_by_ids(dataset, result.test_ids)
            report["test"] = evaluate(result.params, test_set, standardizer=result.standardizer).to_data()
        report_path = write_json(self.out / "train_report.json", report)
        rows = [
            ("records", f"{len(result.train_ids)} train / {len(result.test_ids)} test"),
            ("epochs", str(train_config.epochs)),
            ("final_train_mse", _format_optional(report["final_train_mse"])),
            ("final_test_mse", _format_optional(report["final_test_mse"])),
            ("checkpoint", str(checkpoint)),
        ]
        return CommandResult("fdist train", rows, [checkpoint, sidecar, history, report_path], report)

    def cmd_eval(
        self,
        dataset_path: Path,
        checkpoint_path: Path,
        ft_path: Path | None = None,
        split: str = "test",
    ) -> CommandResult:
        model = load_model(self.data_path(checkpoint_path))
        dataset = read_dataset(self.data_path(dataset_path))
        self._check_dataset(dataset)
        if (model.m, model.n) != (dataset.m, dataset.n):
            raise ConfigurationError(
                f"checkpoint expects m={model.m}, n={model.n}; dataset has m={dataset.m}, n={dataset.n}"
            )
        if split not in ("test", "all"):
            raise InputError(f"unsupported split [{split}], expected test or all")
        selected = dataset
        if split == "test":
            test_ids = [str(key) for key in (model.extra or {}).get("test_ids", [])]
            if test_ids:
                selected = _subset_by_ids(dataset, test_ids)
        readings = (
            read_ft_csv(self.data_path(ft_path), self.config.synth.ft_resolution) if ft_path else None
        )
        report: EvalReport = evaluate(model.params, selected, readings, model.standardizer)
        data = {**self.report_header(), "split": split, **report.to_data()}
        path = write_json(self.out / "eval.json", data)
        rows = [("records", str(report.count))]
        for axis, rmse, rmses in zip("xyz", report.rmse.as_tuple(), report.rmses):
            rows.append((f"rmse_{axis}", f"{rmse:.4g} N"))
            rows.append((f"rmses_{axis}", _format_optional(rmses, " N")))
        rows.extend(
            (f"rmset_fem_{axis}", f"{value:.4g} N")
            for axis, value in zip("xyz", report.rmset_fem.as_tuple())
        )
        if report.rmset_ft is not None:
            rows.extend(
                (f"rmset_ft_{axis}", f"{value:.4g} N")
                for axis, value in zip("xyz", report.rmset_ft.as_tuple())
            )
        return CommandResult("fdist eval", rows, [path], data)

    def cmd_predict(self, checkpoint_path: Path, features_path: Path, grid_spec: str | None = None) -> CommandResult:
        model = load_model(self.data_path(checkpoint_path))
        features = read_features_csv(self.data_path(features_path))
        grid = self._grid(grid_spec)
        if grid.n != model.n:
            raise ConfigurationError(f"grid has {grid.n} bins, checkpoint predicts {model.n}")
        label = ForceDistributionLabel.from_packed(
            Path(features_path).stem, grid, predict(model, features.values)
        )
        _, manifest = write_labels([label], grid, self.out / "prediction.csv", self.out / "prediction.json")
        totals = total_force(label)
        rows = [(f"total_{axis}", f"{value:.4g} N") for axis, value in totals.to_data().items()]
        return CommandResult("fdist predict", rows, [self.out / "prediction.csv", manifest])

    def _read_curve_spec(self, spec: str) -> StressStretchCurve:
        case, sep, path = spec.partition(":")
        if not sep or not path:
            raise InputError(f"curve argument must look like CASE:PATH, got [{spec}]")
        return read_curve_csv(self.data_path(path), LoadCase.parse(case))

    def _characterize(self, kind: str, inputs: Sequence[Path], case: str) -> list[StressStretchCurve]:
        paths = [self.data_path(path) for path in inputs]
        if kind == "tension":
            return [curve_from_tension(read_tension_csv(p), case, label=p.stem) for p in paths]
        if kind == "inflation":
            return [curve_from_inflation(read_inflation_csv(p), label=p.stem) for p in paths]
        raise InputError(f"unsupported test kind [{kind}], expected tension or inflation")

    def _grid(self, grid_spec: str | None) -> BinGrid:
        if grid_spec is None:
            return self.config.bin_grid()
        rows, cols = parse_shape(grid_spec, "grid")
        return BinGrid(Rect.square(self.config.grid.extent_mm), rows, cols)

    def _regions(self, regions: str | None) -> tuple[int, int]:
        if regions is None:
            return self.config.flow.region_rows, self.config.flow.region_cols
        return parse_shape(regions, "regions")

    def _check_dataset(self, dataset: Dataset) -> None:
        expected_m = self.config.flow.region_rows * self.config.flow.region_cols
        expected_n = self.config.bin_grid().n
        if (dataset.m, dataset.n) != (expected_m, expected_n):
            raise ConfigurationError(
                f"dataset has m={dataset.m}, n={dataset.n}; config expects m={expected_m}, n={expected_n}"
            )

    def _map(self, function: Callable[[T], R], items: Iterable[T]) -> list[R]:
        items = list(items)
        if self.threads > 1 and len(items) > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                return list(pool.map(function, items))
        return [function(item) for item in items]


def synth_centers(
    extent: Rect, spacing_mm: float, margin_mm: float, depths_mm: Sequence[float]
) -> list[tuple[str, float, float, float]]:
    """Regular lattice of indentation centers, each pressed to every depth."""
    if spacing_mm <= 0:
        raise InputError("indentation spacing must be positive")
    span_x = extent.width - 2.0 * margin_mm
    span_y = extent.height - 2.0 * margin_mm
    if span_x < 0 or span_y < 0 or not depths_mm:
        raise InputError("indentation spacing, margin and depths leave no indentations")
    xs = extent.x0 + margin_mm + spacing_mm * np.arange(int(math.floor(span_x / spacing_mm + 1e-9)) + 1)
    ys = extent.y0 + margin_mm + spacing_mm * np.arange(int(math.floor(span_y / spacing_mm + 1e-9)) + 1)
    metas = []
    for cy in ys.tolist():
        for cx in xs.tolist():
            for depth in depths_mm:
                metas.append((f"i{len(metas):05d}", cx, cy, float(depth)))
    return metas


def parse_shape(text: str, label: str) -> tuple[int, int]:
    parts = text.lower().replace("×", "x").split("x")
    try:
        rows, cols = (int(part) for part in parts)
    except ValueError as exc:
        raise InputError(f"{label} must look like ROWSxCOLS, got [{text}]") from exc
    if rows < 1 or cols < 1:
        raise InputError(f"{label} must have positive rows and cols, got [{text}]")
    return rows, cols


def _subset_by_ids(dataset: Dataset, ids: Iterable[str]) -> Dataset:
    wanted = set(ids)
    return dataset.subset(i for i, key in enumerate(dataset.ids) if key in wanted)


def _require_same_ids(found: set[str], expected: set[str], label: str) -> None:
    offenders = found ^ expected
    if offenders:
        raise PairingError(offenders, f"indentation ids between forces and {label}")


def _format_optional(value: float | None, unit: str = "") -> str:
    return "n/a" if value is None else f"{value:.4g}{unit}"
