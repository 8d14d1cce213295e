import json

import numpy as np
import pytest
from click.testing import CliRunner

from periscreen.cli import main
from periscreen.masks import read_mask_png, write_mask_png, BinaryMask
from periscreen.masksynth import RgbImage, write_rgb_png
from periscreen.synthetic import write_reference_dataset


@pytest.fixture(scope="module")
def dataset_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli_dataset")
    write_reference_dataset(d, alignment="cohort")
    return d


@pytest.fixture
def runner():
    return CliRunner()


class TestValidate:
    def test_valid_dataset_exits_zero(self, runner, dataset_dir):
        result = runner.invoke(main, ["validate", str(dataset_dir)])
        assert result.exit_code == 0
        assert "284 subjects" in result.output

    def test_broken_dataset_exits_one(self, runner, dataset_dir, tmp_path):
        broken = tmp_path / "broken"
        broken.mkdir()
        for name in ("subjects.csv", "questionnaire.csv", "screenings.csv", "annotations.jsonl"):
            broken.joinpath(name).write_bytes(dataset_dir.joinpath(name).read_bytes())
        text = (broken / "subjects.csv").read_text().splitlines()
        text[1] = "s001,17,female"  # age below the study range
        (broken / "subjects.csv").write_text("\n".join(text) + "\n")
        result = runner.invoke(main, ["validate", str(broken)])
        assert result.exit_code == 1
        assert "error" in result.output

    def test_missing_directory_exits_two(self, runner, tmp_path):
        empty = tmp_path / "empty"
        empty.mkdir()
        result = runner.invoke(main, ["validate", str(empty)])
        assert result.exit_code == 2


class TestAggregate:
    def test_aggregate_to_stdout(self, runner, dataset_dir):
        result = runner.invoke(main, ["aggregate-mgi", str(dataset_dir)])
        assert result.exit_code == 0
        lines = result.output.strip().splitlines()
        assert lines[0] == "subject_id,mgi"
        assert len(lines) == 285


class TestReport:
    def test_report_bundle_files(self, runner, dataset_dir, tmp_path):
        out = tmp_path / "report"
        result = runner.invoke(
            main,
            ["report", str(dataset_dir), "--out", str(out), "--stratify", "gender"],
        )
        assert result.exit_code == 0, result.output
        names = {p.name for p in out.iterdir()}
        assert "mgi_distribution.csv" in names
        assert "questionnaire_grid.csv" in names
        assert "screening_grid.json" in names
        assert "report_metadata.json" in names
        grid = json.loads((out / "questionnaire_grid.json").read_text())
        stars = {(c["mgi"], c["condition"]) for c in grid["cells"] if c["significant"]}
        assert stars == {(4, "swollen_joints"), (4, "fh_eye_disease")}

    def test_byte_identical_reruns(self, runner, dataset_dir, tmp_path):
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        for out in (out1, out2):
            assert runner.invoke(main, ["report", str(dataset_dir), "--out", str(out)]).exit_code == 0
        for p1 in sorted(out1.iterdir()):
            p2 = out2 / p1.name
            assert p1.read_bytes() == p2.read_bytes()


class TestCorrelate:
    def test_grid_json_written(self, runner, dataset_dir, tmp_path):
        out = tmp_path / "grids"
        result = runner.invoke(
            main,
            ["correlate", str(dataset_dir), "--out", str(out), "--alpha", "0.05"],
        )
        assert result.exit_code == 0, result.output
        grid = json.loads((out / "grid_all.json").read_text())
        assert grid["alpha"] == 0.05
        assert grid["population_size"] == 284

    def test_stratified_grids(self, runner, dataset_dir, tmp_path):
        out = tmp_path / "grids"
        result = runner.invoke(
            main,
            ["correlate", str(dataset_dir), "--out", str(out), "--stratify", "age"],
        )
        assert result.exit_code == 0, result.output
        assert (out / "grid_age_cohort_middle_age.json").exists()


class TestMaskCommands:
    def test_segment_and_eval(self, runner, tmp_path):
        images = tmp_path / "images"
        images.mkdir()
        arr = np.zeros((480, 640, 3), dtype=np.uint8)
        arr[100:200, 100:300] = (255, 0, 0)
        write_rgb_png(RgbImage(arr), images / "img1.png")

        pred_dir = tmp_path / "pred"
        result = runner.invoke(main, ["segment", "--images", str(images), "--out", str(pred_dir)])
        assert result.exit_code == 0, result.output
        mask = read_mask_png(pred_dir / "img1.png")
        assert mask.count() == 100 * 200

        truth_dir = tmp_path / "truth"
        truth_dir.mkdir()
        truth = np.zeros((480, 640), dtype=bool)
        truth[100:200, 100:300] = True
        write_mask_png(BinaryMask(truth), truth_dir / "img1.png")
        (pred_dir / "config.json").unlink()  # only masks should pair up

        out = tmp_path / "eval"
        result = runner.invoke(
            main,
            ["seg-eval", "--pred", str(pred_dir), "--truth", str(truth_dir), "--out", str(out)],
        )
        assert result.exit_code == 0, result.output
        metrics = json.loads((out / "metrics.json").read_text())
        assert metrics["mean_iou"] == 1.0

    def test_masks_from_annotations(self, runner, tmp_path):
        from periscreen.annotations import AnnotationSite, ImageAnnotation, SiteMark
        from periscreen.dataio import write_annotations_jsonl

        images = tmp_path / "images"
        images.mkdir()
        arr = np.zeros((480, 640, 3), dtype=np.uint8)
        arr[200:280, 200:400] = (250, 10, 10)
        write_rgb_png(RgbImage(arr), images / "img1.png")

        ann = ImageAnnotation(
            "img1", "s1", "expA", 3,
            marks=(
                SiteMark(
                    site=AnnotationSite.GINGIVAL_MARGIN,
                    points=((210.0, 210.0), (390.0, 210.0), (390.0, 270.0), (210.0, 270.0)),
                    diseased=True,
                ),
            ),
        )
        ann_path = tmp_path / "annotations.jsonl"
        write_annotations_jsonl([ann], ann_path)

        out = tmp_path / "masks"
        result = runner.invoke(
            main,
            ["masks", "--images", str(images), "--annotations", str(ann_path), "--out", str(out)],
        )
        assert result.exit_code == 0, result.output
        mask = read_mask_png(out / "img1.png")
        assert mask.count() > 0
        assert (out / "config.json").exists()
