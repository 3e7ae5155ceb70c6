"""Config validation, CSV output contracts, CLI exit codes."""

import textwrap

import pytest

from arqsec import cli, config, experiments


def make_config(tmp_path, body, name="exp.ini"):
    path = tmp_path / name
    path.write_text(textwrap.dedent(body))
    return str(path)


def rate_curves_config(tmp_path, out_name="rates.csv", seed=20240601):
    return make_config(
        tmp_path,
        f"""
        [experiment]
        kind = RateCurves
        master_seed = {seed}
        output_path = {tmp_path / out_name}

        [params]
        snr_db = 0, 10
        rc = 0
        n_samples = 5000
        r0_max = 4.0
        r0_step = 0.5
        n_power = 4
        """,
    )


class TestValidate:
    def test_alpha_out_of_range_names_the_field(self):
        text = """
        [experiment]
        kind = TemporalAdaptation
        master_seed = 1
        output_path = out.csv
        [params]
        alpha = 1.5
        """
        with pytest.raises(config.ConfigError) as err:
            config.validate(textwrap.dedent(text))
        assert len(err.value.errors) == 1
        assert "params.alpha" in err.value.errors[0]

    def test_missing_master_seed_demands_explicit_entropy(self):
        text = """
        [experiment]
        kind = DelayLimited
        output_path = out.csv
        [params]
        k = 4
        r0 = 1.0
        snr_db = 0
        """
        with pytest.raises(config.ConfigError) as err:
            config.validate(textwrap.dedent(text))
        assert any("master_seed" in e for e in err.value.errors)

    def test_all_violations_reported_at_once(self):
        text = """
        [experiment]
        kind = CrownSecrecy
        output_path = out.csv
        [params]
        gamma_ab = 1.7
        gamma_ba = -0.1
        gamma_ae = 0.01
        gamma_be = 0.01
        n_init = 11
        width = 13
        """
        with pytest.raises(config.ConfigError) as err:
            config.validate(textwrap.dedent(text))
        joined = "\n".join(err.value.errors)
        assert "master_seed" in joined
        assert "gamma_ab" in joined
        assert "gamma_ba" in joined
        assert "n_init" in joined
        assert "width" in joined
        assert len(err.value.errors) >= 5

    def test_fig6_loss_regime_parses_exactly(self):
        text = """
        [experiment]
        kind = CrownSecrecy
        master_seed = 3
        output_path = out.csv
        [params]
        gamma_ab = 0.005
        gamma_ba = 0.009
        gamma_ae = 0.004
        gamma_be = 0.004
        n_init = 10, 100
        """
        spec = config.validate(textwrap.dedent(text))
        assert spec.params["gamma_ab"] == 0.005
        assert spec.params["gamma_ba"] == 0.009
        assert spec.params["gamma_ae"] == 0.004
        assert spec.params["n_init"] == (10, 100)

    def test_unknown_kind_and_parameter(self):
        text = """
        [experiment]
        kind = Nonsense
        master_seed = 1
        output_path = out.csv
        """
        with pytest.raises(config.ConfigError) as err:
            config.validate(textwrap.dedent(text))
        assert any("kind" in e for e in err.value.errors)

        text2 = """
        [experiment]
        kind = RateCurves
        master_seed = 1
        output_path = out.csv
        [params]
        snr_db = 0
        bogus = 3
        """
        with pytest.raises(config.ConfigError) as err2:
            config.validate(textwrap.dedent(text2))
        assert any("bogus" in e for e in err2.value.errors)

    def test_metadata_line_round_trips(self, tmp_path):
        spec = config.load(rate_curves_config(tmp_path))
        rebuilt = config.spec_from_metadata(config.metadata_line(spec))
        assert rebuilt == spec


class TestRun:
    def test_rate_curves_columns_and_determinism(self, tmp_path):
        cfg = rate_curves_config(tmp_path)
        assert cli.main(["run", "--config", cfg]) == 0
        out = tmp_path / "rates.csv"
        first = out.read_bytes()
        lines = first.decode().splitlines()
        assert lines[0].startswith("# arqsec kind=RateCurves")
        assert lines[1] == "snr_db,rc,cs,ce,std_err_cs,std_err_ce"
        assert len(lines) == 2 + 2  # two sweep points

        assert cli.main(["run", "--config", cfg]) == 0
        assert out.read_bytes() == first

    def test_embedded_spec_reproduces_the_file(self, tmp_path):
        cfg = rate_curves_config(tmp_path)
        cli.main(["run", "--config", cfg])
        out = tmp_path / "rates.csv"
        original = out.read_bytes()
        spec = config.spec_from_metadata(original.decode().splitlines()[0])
        cli.run_spec(spec)
        assert out.read_bytes() == original

    def test_seed_override_changes_rows(self, tmp_path):
        cfg = rate_curves_config(tmp_path)
        cli.main(["run", "--config", cfg])
        base = (tmp_path / "rates.csv").read_text().splitlines()
        cli.main(["run", "--config", cfg, "--seed-override", "999"])
        changed = (tmp_path / "rates.csv").read_text().splitlines()
        assert base[2:] != changed[2:]

    def test_output_override(self, tmp_path):
        cfg = rate_curves_config(tmp_path)
        target = tmp_path / "elsewhere.csv"
        assert cli.main(["run", "--config", cfg, "--output", str(target)]) == 0
        assert target.exists()

    def test_config_error_exit_code(self, tmp_path):
        bad = make_config(
            tmp_path,
            """
            [experiment]
            kind = RateCurves
            output_path = out.csv
            """,
        )
        assert cli.main(["validate", "--config", bad]) == 2
        assert cli.main(["run", "--config", bad]) == 2

    def test_runtime_error_leaves_no_partial_file(self, tmp_path):
        cfg = make_config(
            tmp_path,
            f"""
            [experiment]
            kind = RateCurves
            master_seed = 5
            output_path = {tmp_path}/no_such_dir/out.csv
            [params]
            snr_db = 0
            n_samples = 2000
            r0_step = 1.0
            n_power = 2
            """,
        )
        assert cli.main(["run", "--config", cfg]) == 3
        assert not (tmp_path / "no_such_dir").exists()

    def test_validate_ok(self, tmp_path):
        cfg = rate_curves_config(tmp_path)
        assert cli.main(["validate", "--config", cfg]) == 0

    def test_jobs_flag_preserves_row_order(self, tmp_path):
        cfg = rate_curves_config(tmp_path)
        cli.main(["run", "--config", cfg])
        serial = (tmp_path / "rates.csv").read_bytes()
        assert cli.main(["run", "--config", cfg, "--jobs", "2"]) == 0
        assert (tmp_path / "rates.csv").read_bytes() == serial


class TestOtherKinds:
    def test_delay_limited_rows(self, tmp_path):
        cfg = make_config(
            tmp_path,
            f"""
            [experiment]
            kind = DelayLimited
            master_seed = 11
            output_path = {tmp_path}/dl.csv
            [params]
            k = 2, 4
            r0 = 1.0
            snr_db = 0
            episodes = 2000
            """,
        )
        assert cli.main(["run", "--config", cfg]) == 0
        lines = (tmp_path / "dl.csv").read_text().splitlines()
        assert lines[1].split(",")[:4] == ["k", "r0", "snr_db", "rc"]
        assert len(lines) == 2 + 2

    def test_crown_secrecy_rows_with_trace(self, tmp_path):
        trace_path = tmp_path / "s.trace"
        cfg = make_config(
            tmp_path,
            f"""
            [experiment]
            kind = CrownSecrecy
            master_seed = 21
            output_path = {tmp_path}/cs.csv
            [params]
            gamma_ab = 0.01
            gamma_ba = 0.01
            gamma_ae = 0.02
            gamma_be = 0.02
            n_init = 4
            n_data = 200
            n_seeds = 5
            trace_path = {trace_path}
            """,
        )
        assert cli.main(["run", "--config", cfg]) == 0
        assert trace_path.exists()
        first = (tmp_path / "cs.csv").read_bytes()
        first_trace = trace_path.read_bytes()
        assert cli.main(["run", "--config", cfg]) == 0
        assert (tmp_path / "cs.csv").read_bytes() == first
        assert trace_path.read_bytes() == first_trace

    def test_crown_attack_rows(self, tmp_path):
        cfg = make_config(
            tmp_path,
            f"""
            [experiment]
            kind = CrownAttack
            master_seed = 31
            output_path = {tmp_path}/atk.csv
            [params]
            attack = inject
            n_sessions = 50
            n_data = 30
            at_frame = 10
            n_init = 4
            """,
        )
        assert cli.main(["run", "--config", cfg]) == 0
        lines = (tmp_path / "atk.csv").read_text().splitlines()
        row = dict(zip(lines[1].split(","), lines[2].split(",")))
        assert row["detection_rate"] == "1.0"

    def test_temporal_adaptation_small(self, tmp_path):
        cfg = make_config(
            tmp_path,
            f"""
            [experiment]
            kind = TemporalAdaptation
            master_seed = 41
            output_path = {tmp_path}/ta.csv
            [params]
            alpha = 1.0
            frames = 1000
            n_seeds = 2
            r0_max = 6.0
            r0_step = 0.5
            """,
        )
        assert cli.main(["run", "--config", cfg]) == 0
        lines = (tmp_path / "ta.csv").read_text().splitlines()
        assert lines[1].split(",")[0] == "alpha"
        assert len(lines) == 3

    def test_dumb_antenna_small(self, tmp_path):
        cfg = make_config(
            tmp_path,
            f"""
            [experiment]
            kind = DumbAntenna
            master_seed = 51
            output_path = {tmp_path}/da.csv
            [params]
            n_antennas = 1, 4
            n_samples = 5000
            r0_max = 4.0
            r0_step = 0.5
            n_power = 3
            """,
        )
        assert cli.main(["run", "--config", cfg]) == 0
        lines = (tmp_path / "da.csv").read_text().splitlines()
        rows = [line.split(",") for line in lines[2:]]
        # One antenna cannot beat the fully correlated channel.
        assert float(rows[0][2]) == 0.0
        assert float(rows[1][2]) > 0.0


class TestColumnsRegistry:
    def test_every_kind_has_columns_and_runner(self):
        for kind in config.KINDS:
            assert kind in experiments.COLUMNS
            assert kind in experiments.RUNNERS


class TestLogging:
    def test_invalid_log_level_is_a_config_error(self, monkeypatch, tmp_path):
        monkeypatch.setenv("ARQSEC_LOG", "loud")
        cfg = rate_curves_config(tmp_path)
        with pytest.raises(SystemExit) as exc:
            cli.main(["validate", "--config", cfg])
        assert exc.value.code == 2
