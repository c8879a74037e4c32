"""scenario のユニットテスト"""

import json

import numpy as np
import pytest

from reductive import AlphaKind
from rolling import ConstantControl, SampledControl, SpecialControl, integrate_rolling
from scenario import (
    ControlKind,
    Derivative,
    ScenarioConfigError,
    SpaceKind,
    build_alpha,
    build_control,
    build_space,
    load_scenario,
    parse_scenario,
    read_trajectory_csv,
    special_xi,
    trajectory_header,
    write_report,
    write_trajectory_csv,
)


def _scenario(**overrides):
    data = {
        "space": {"type": "stiefel", "n": 3, "k": 1, "alpha_param": 1.0},
        "control": {"type": "constant", "coords": [1.0, 0.0]},
        "t1": 1.0,
        "steps": 10,
    }
    data.update(overrides)
    return data


class TestParseScenario:
    """parse_scenario と load_scenario のテスト"""

    def test_defaults(self, tmp_path):
        """derivative と seed と output の既定値が設定されること"""
        config = parse_scenario(_scenario(), tmp_path)
        assert config.space.kind is SpaceKind.STIEFEL
        assert config.derivative is Derivative.CANONICAL_FIRST
        assert config.control.kind is ControlKind.CONSTANT
        assert config.control.coords == (1.0, 0.0)
        assert config.seed == 0
        assert config.output is None

    @pytest.mark.parametrize(
        ("overrides", "field"),
        [
            ({"steps": 0}, "'steps'"),
            ({"steps": 2.5}, "'steps'"),
            ({"steps": True}, "'steps'"),
            ({"t1": -1.0}, "'t1'"),
            ({"derivative": "levi_civita"}, "'derivative'"),
            ({"space": {"type": "torus", "n": 3}}, "'space.type'"),
            ({"space": {"type": "so_n", "n": 1}}, "'space.n'"),
            ({"space": {"type": "stiefel", "n": 2, "k": 3, "alpha_param": 1.0}}, "'space.k'"),
            ({"space": {"type": "stiefel", "n": 3, "k": 1}}, "'space.alpha_param'"),
            ({"control": {"type": "constant", "coords": [1.0, "x"]}}, "'control.coords[1]'"),
            ({"control": {"type": "special"}}, "'control.xi'"),
        ],
    )
    def test_invalid_fields_are_named(self, tmp_path, overrides, field):
        """不正なフィールドでフィールド名を含む ScenarioConfigError が発生すること"""
        with pytest.raises(ScenarioConfigError, match=field.replace("[", r"\[").replace("]", r"\]")):
            parse_scenario(_scenario(**overrides), tmp_path)

    def test_missing_top_level_field(self, tmp_path):
        """必須フィールドの欠落でフィールド名を含むエラーになること"""
        data = _scenario()
        del data["t1"]
        with pytest.raises(ScenarioConfigError, match="missing field 't1'"):
            parse_scenario(data, tmp_path)

    def test_sampled_file_resolves_against_scenario_directory(self, tmp_path):
        """サンプル制御のファイルがシナリオファイルのディレクトリから解決されること"""
        (tmp_path / "u.csv").write_text("t,u_0,u_1\n0,1,0\n1,0,1\n", encoding="utf-8")
        scenario_file = tmp_path / "scenario.json"
        scenario_file.write_text(json.dumps(_scenario(control={"type": "sampled", "file": "u.csv"})), encoding="utf-8")
        config = load_scenario(scenario_file)
        assert config.control.file == tmp_path / "u.csv"

    def test_missing_sampled_file(self, tmp_path):
        """存在しないサンプル制御ファイルでエラーになること"""
        with pytest.raises(ScenarioConfigError, match="'control.file'"):
            parse_scenario(_scenario(control={"type": "sampled", "file": "absent.csv"}), tmp_path)

    def test_invalid_json(self, tmp_path):
        """JSON として不正なファイルで ScenarioConfigError が発生すること"""
        path = tmp_path / "broken.json"
        path.write_text("{", encoding="utf-8")
        with pytest.raises(ScenarioConfigError, match="not valid JSON"):
            load_scenario(path)

    def test_unreadable_file(self, tmp_path):
        """存在しないシナリオファイルで ScenarioConfigError が発生すること"""
        with pytest.raises(ScenarioConfigError, match="cannot read"):
            load_scenario(tmp_path / "absent.json")


class TestBuild:
    """空間、微分、制御の構築のテスト"""

    @pytest.mark.parametrize(
        ("space", "dim_m"),
        [
            ({"type": "so_n", "n": 3}, 3),
            ({"type": "lie_group", "n": 4}, 6),
            ({"type": "symmetric_pair", "n": 3}, 3),
            ({"type": "stiefel", "n": 4, "k": 2, "alpha_param": 0.5}, 5),
        ],
    )
    def test_space_dimensions(self, tmp_path, space, dim_m):
        """設定した空間の m の次元が正しいこと"""
        built = build_space(parse_scenario(_scenario(space=space), tmp_path).space)
        assert built.space.dim_m == dim_m
        assert (built.stiefel is not None) == (space["type"] == "stiefel")

    def test_alpha(self):
        """derivative の値が対応する AlphaMap になること"""
        assert build_alpha(Derivative.CANONICAL_FIRST).kind is AlphaKind.CANONICAL_FIRST
        assert build_alpha(Derivative.CANONICAL_SECOND).kind is AlphaKind.CANONICAL_SECOND

    def test_constant_control(self, tmp_path):
        """一定制御の定義域が [0, t1] になること"""
        config = parse_scenario(_scenario(t1=2.0), tmp_path)
        space = build_space(config.space).space
        u = build_control(config, space, build_alpha(config.derivative))
        assert isinstance(u, ConstantControl)
        assert (u.t0, u.t1) == (0.0, 2.0)

    def test_constant_control_dimension_checked(self, tmp_path):
        """m の次元と合わない座標でエラーになること"""
        config = parse_scenario(_scenario(control={"type": "constant", "coords": [1.0]}), tmp_path)
        space = build_space(config.space).space
        with pytest.raises(ScenarioConfigError, match="needs 2 entries"):
            build_control(config, space, build_alpha(config.derivative))

    def test_sampled_control_is_cut_at_t1(self, tmp_path):
        """t1 より長いサンプル制御が t1 で切り詰められること"""
        (tmp_path / "u.csv").write_text("t,u_0,u_1\n0,0,0\n1,2,0\n2,4,0\n", encoding="utf-8")
        config = parse_scenario(_scenario(control={"type": "sampled", "file": "u.csv"}, t1=1.5), tmp_path)
        space = build_space(config.space).space
        u = build_control(config, space, build_alpha(config.derivative))
        assert isinstance(u, SampledControl)
        assert u.t1 == 1.5
        np.testing.assert_allclose(u(1.5), [3.0, 0.0])

    def test_sampled_control_must_cover_interval(self, tmp_path):
        """[0, t1] を覆わないサンプル制御でエラーになること"""
        (tmp_path / "u.csv").write_text("t,u_0,u_1\n0,0,0\n0.5,1,0\n", encoding="utf-8")
        config = parse_scenario(_scenario(control={"type": "sampled", "file": "u.csv"}), tmp_path)
        space = build_space(config.space).space
        with pytest.raises(ScenarioConfigError, match="cover"):
            build_control(config, space, build_alpha(config.derivative))

    def test_special_control(self, tmp_path):
        """special 制御が代数座標 xi から構築されること"""
        config = parse_scenario(_scenario(control={"type": "special", "xi": [0.5, 0.0, 0.3]}), tmp_path)
        space = build_space(config.space).space
        u = build_control(config, space, build_alpha(config.derivative))
        assert isinstance(u, SpecialControl)
        np.testing.assert_allclose(special_xi(config, space).coords, [0.5, 0.0, 0.3])

    def test_special_xi_dimension_checked(self, tmp_path):
        """代数の次元と合わない xi でエラーになること"""
        config = parse_scenario(_scenario(control={"type": "special", "xi": [0.5]}), tmp_path)
        space = build_space(config.space).space
        with pytest.raises(ScenarioConfigError, match="'control.xi'"):
            special_xi(config, space)


class TestOutputFiles:
    """軌道 CSV とレポート JSON のテスト"""

    def test_header(self):
        """ヘッダが t, v, g, S, gamma の順に並ぶこと"""
        header = trajectory_header(2, 3, (3, 1))
        assert header[:3] == ["t", "v_0", "v_1"]
        assert header[3:5] == ["g_00", "g_01"]
        assert "S_11" in header
        assert header[-1] == "gamma_20"
        assert len(header) == 1 + 2 + 9 + 4 + 3

    def test_wide_header_uses_separator(self):
        """次元が10を超える場合に添字が区切られること"""
        assert "g_10_11" in trajectory_header(1, 12, None)

    def test_trajectory_csv(self, tmp_path):
        """書き出した CSV から状態と展開曲線が17桁で読み戻せること"""
        built = build_space(parse_scenario(_scenario(), tmp_path).space)
        alpha = build_alpha(Derivative.CANONICAL_FIRST)
        traj = integrate_rolling(alpha, built.space, ConstantControl(np.array([0.3, 0.4])), steps=5)
        path = tmp_path / "out" / "trajectory.csv"
        write_trajectory_csv(path, traj)
        table = read_trajectory_csv(path)
        assert table.header[0] == "t"
        np.testing.assert_array_equal(table.times, traj.times)
        np.testing.assert_array_equal(table.v, traj.v)
        np.testing.assert_array_equal(table.g, traj.g)
        np.testing.assert_array_equal(table.S, traj.S)
        assert table.gamma is not None
        np.testing.assert_array_equal(table.gamma, traj.development)

    def test_report_is_sorted_json(self, tmp_path):
        """レポートがキー順の JSON で書かれること"""
        path = tmp_path / "report.json"
        write_report(path, {"b": 1, "a": 2.5})
        text = path.read_text(encoding="utf-8")
        assert text.index('"a"') < text.index('"b"')
        assert json.loads(text) == {"a": 2.5, "b": 1}
