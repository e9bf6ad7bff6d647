import pytest

from fsireport.artifacts import (ArtifactError, discover_artifacts,
                                 load_estimates, load_history, load_norms,
                                 load_study_eps, load_study_mms)

HISTORY = ("eps,k,update_norm_X,contraction_factor,picard_total\n"
           "0.01,1,0.5,0.0,3\n0.01,2,0.25,0.5,3\n")


def test_discover_finds_known_files(tmp_path):
    (tmp_path / "history.csv").write_text(HISTORY)
    (tmp_path / "unrelated.txt").write_text("x")
    found = discover_artifacts(str(tmp_path))
    assert found.has("history.csv")
    assert not found.has("study_mms.csv")
    assert list(found.paths) == ["history.csv"]


def test_discover_rejects_nondirectory(tmp_path):
    with pytest.raises(ArtifactError):
        discover_artifacts(str(tmp_path / "nope"))


def test_load_history(tmp_path):
    p = tmp_path / "history.csv"
    p.write_text(HISTORY)
    rows = load_history(str(p))
    assert [r.k for r in rows] == [1, 2]
    assert rows[1].contraction_factor == 0.5
    assert rows[0].picard_total == 3


def test_load_history_bad_header(tmp_path):
    p = tmp_path / "history.csv"
    p.write_text("eps,k,norm\n0.01,1,0.5\n")
    with pytest.raises(ArtifactError, match="header"):
        load_history(str(p))


def test_load_history_bad_number(tmp_path):
    p = tmp_path / "history.csv"
    p.write_text("eps,k,update_norm_X,contraction_factor,picard_total\n"
                 "0.01,1,oops,0.0,3\n")
    with pytest.raises(ArtifactError, match="not a number"):
        load_history(str(p))


def test_load_history_short_row(tmp_path):
    p = tmp_path / "history.csv"
    p.write_text("eps,k,update_norm_X,contraction_factor,picard_total\n"
                 "0.01,1\n")
    with pytest.raises(ArtifactError, match="fields"):
        load_history(str(p))


def test_load_study_tables(tmp_path):
    mms = tmp_path / "study_mms.csv"
    mms.write_text("side,refinement,h,error,order\n"
                   "solid,1,0.0625,0.001,nan\nsolid,2,0.03125,0.00025,2.0\n")
    rows = load_study_mms(str(mms))
    assert rows[0].side == "solid" and rows[1].order == 2.0

    eps = tmp_path / "study_eps.csv"
    eps.write_text("eps,u_gap_x,grad_gap,a_gap,reg_energy\n"
                   "0.1,1e-3,2e-3,3e-3,4e-5\n0.01,1e-4,2e-4,3e-4,4e-6\n")
    rows = load_study_eps(str(eps))
    assert rows[1].reg_energy == 4e-6


def test_load_estimates_flags(tmp_path):
    p = tmp_path / "estimate_report.csv"
    p.write_text("estimate_id,constant,samples,refinement,pass,slack\n"
                 "LAME_INVERSE,2.5,10,1,True,0.1\n"
                 "EPS_LIMIT,0.0,0,1,None,0.0\n")
    rows = load_estimates(str(p))
    assert rows[0].passed is True and rows[1].passed is None
    p.write_text("estimate_id,constant,samples,refinement,pass,slack\n"
                 "X,1.0,1,1,maybe,0.0\n")
    with pytest.raises(ArtifactError, match="pass flag"):
        load_estimates(str(p))


def test_load_norms(tmp_path):
    p = tmp_path / "norms.csv"
    p.write_text("name,value,component1,component2,component3\n"
                 "x_norm,1.5,0.5,0.5,0.5\n")
    rows = load_norms(str(p))
    assert rows[0].name == "x_norm" and rows[0].components == [0.5, 0.5, 0.5]
