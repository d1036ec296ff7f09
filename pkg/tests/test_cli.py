from hyperclimb.cli import main
from hyperclimb.experiment import read_trace_csv
from hyperclimb.fractal import read_pgm
from hyperclimb.maxsat import read_dimacs
from hyperclimb.staircase import (
    StaircaseDescriptor,
    make_basic,
    read_descriptor_file,
    write_descriptor_file,
)


def test_verify_signals_passes(capsys):
    assert main(["verify-signals", "--max-h", "2", "--max-o", "2"]) == 0
    out = capsys.readouterr().out
    assert "signal checks within" in out
    assert "FAIL" not in out


def test_verify_symmetry_small(capsys):
    code = main(
        [
            "verify-symmetry",
            "--trials", "6",
            "--generations", "10",
            "--population", "16",
            "--seed", "1",
        ]
    )
    assert code == 0
    assert "passed" in capsys.readouterr().out


def test_run_staircase_writes_traces(tmp_path):
    out = tmp_path / "run"
    code = main(
        [
            "run-staircase",
            "--basic", "2", "2", "1", "0.5",
            "--trials", "2",
            "--generations", "4",
            "--population", "8",
            "--seed", "3",
            "--out-dir", str(out),
        ]
    )
    assert code == 0
    assert (out / "aggregate.csv").is_file()
    trace = read_trace_csv(out / "trial_001.csv")
    assert trace.generations == 4
    assert trace.seed == 3


def test_run_staircase_with_descriptor_and_clamping(tmp_path):
    desc_path = tmp_path / "d.desc"
    write_descriptor_file(
        StaircaseDescriptor(
            2, 2, 1.0, 0.5, 6, loci=[[1, 4], [2, 5]], targets=[[1, 0], [1, 1]]
        ),
        desc_path,
    )
    out = tmp_path / "run"
    code = main(
        [
            "run-staircase",
            "--descriptor", str(desc_path),
            "--trials", "1",
            "--generations", "3",
            "--population", "6",
            "--clamping", "0.01", "0.1", "2",
            "--out-dir", str(out),
        ]
    )
    assert code == 0
    assert read_trace_csv(out / "trial_000.csv").unmutated_loci is not None


def test_run_multistaircase(tmp_path):
    out = tmp_path / "run"
    code = main(
        [
            "run-multistaircase",
            "--basic", "2", "2", "2", "1", "0.5",
            "--trials", "1",
            "--generations", "3",
            "--population", "8",
            "--track-steps", "2",
            "--out-dir", str(out),
        ]
    )
    assert code == 0
    trace = read_trace_csv(out / "trial_000.csv")
    assert trace.step_frequencies.shape == (3, 2, 2)


def test_run_maxsat_generated(tmp_path):
    out = tmp_path / "run"
    code = main(
        [
            "run-maxsat",
            "--vars", "12",
            "--clauses", "40",
            "--trials", "1",
            "--generations", "3",
            "--population", "6",
            "--out-dir", str(out),
        ]
    )
    assert code == 0
    assert (out / "trial_000.csv").is_file()


def test_missing_config_file_names_path(tmp_path, capsys):
    missing = tmp_path / "nope.ini"
    code = main(["run-staircase", "--config", str(missing)])
    assert code == 1
    assert str(missing) in capsys.readouterr().err


def test_config_file_with_flag_overrides(tmp_path):
    ini = tmp_path / "exp.ini"
    ini.write_text(
        "[experiment]\n"
        "trials = 2\n"
        "[ga]\n"
        "population_size = 8\n"
        "generations = 5\n"
        "seed = 7\n"
        "[fitness]\n"
        "type = staircase\n"
        "basic = 2 2 1 0.5\n"
    )
    out = tmp_path / "run"
    code = main(
        [
            "run-staircase",
            "--config", str(ini),
            "--generations", "3",  # overrides the file's 5
            "--out-dir", str(out),
        ]
    )
    assert code == 0
    trace = read_trace_csv(out / "trial_000.csv")
    assert trace.generations == 3
    assert trace.seed == 7
    assert not (out / "trial_002.csv").exists()


def test_gen_maxsat_round_trip(tmp_path):
    path = tmp_path / "inst.cnf"
    code = main(
        ["gen-maxsat", "--vars", "20", "--clauses", "50", "--seed", "9", "--out", str(path)]
    )
    assert code == 0
    inst = read_dimacs(path)
    assert inst.num_vars == 20 and inst.num_clauses == 50


def test_plot_fractal(tmp_path):
    desc_path = tmp_path / "d.desc"
    write_descriptor_file(
        StaircaseDescriptor(
            4, 2, 3.0, 1.0, 16,
            loci=[[1, 2], [3, 4], [5, 6], [7, 8]],
            targets=[[1, 0], [0, 1], [0, 0], [1, 1]],
        ),
        desc_path,
    )
    out = tmp_path / "plot.pgm"
    code = main(
        ["plot-fractal", "--descriptor", str(desc_path), "--out", str(out), "--seed", "2"]
    )
    assert code == 0
    assert read_pgm(out).shape == (256, 256)


def test_emit_frames_from_trace(tmp_path):
    run_dir = tmp_path / "run"
    assert (
        main(
            [
                "run-staircase",
                "--basic", "2", "2", "1", "0.5",
                "--trials", "1",
                "--generations", "4",
                "--population", "6",
                "--record-one-frequencies",
                "--out-dir", str(run_dir),
            ]
        )
        == 0
    )
    frames_dir = tmp_path / "frames"
    code = main(
        [
            "emit-frames",
            "--trace", str(run_dir / "trial_000.csv"),
            "--out-dir", str(frames_dir),
        ]
    )
    assert code == 0
    assert len(list(frames_dir.glob("frame_*.pgm"))) == 4


def test_emit_frames_without_frequencies_fails(tmp_path, capsys):
    run_dir = tmp_path / "run"
    main(
        [
            "run-staircase",
            "--basic", "2", "2", "1", "0.5",
            "--trials", "1",
            "--generations", "2",
            "--population", "6",
            "--out-dir", str(run_dir),
        ]
    )
    code = main(
        [
            "emit-frames",
            "--trace", str(run_dir / "trial_000.csv"),
            "--out-dir", str(tmp_path / "frames"),
        ]
    )
    assert code == 1
    assert "frequency" in capsys.readouterr().err


def test_default_out_dir_uses_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("HYPERCLIMB_OUT_DIR", str(tmp_path / "env-root"))
    code = main(
        [
            "run-staircase",
            "--basic", "1", "1", "1", "0",
            "--trials", "1",
            "--generations", "1",
            "--population", "4",
            "--seed", "2",
        ]
    )
    assert code == 0
    assert (tmp_path / "env-root" / "staircase-seed2" / "aggregate.csv").is_file()


def test_unknown_descriptor_file(tmp_path, capsys):
    code = main(
        [
            "run-staircase",
            "--descriptor", str(tmp_path / "ghost.desc"),
            "--trials", "1",
            "--generations", "1",
            "--population", "4",
            "--out-dir", str(tmp_path / "out"),
        ]
    )
    assert code == 1


def test_basic_descriptor_file_equivalence(tmp_path):
    # the shorthand file and the --basic flag must describe the same function
    path = tmp_path / "b.desc"
    path.write_text("basic: 3 2 0.5 1\n")
    assert read_descriptor_file(path) == make_basic(3, 2, 0.5, 1.0)
