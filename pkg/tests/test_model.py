import json

import numpy as np
import pytest

from predissoc.model import (CrossingData, ModelValidationError, PotentialModel, crossing_data,
                             default_model, gaussian_tanh_model, load_model, model_from_dict,
                             model_to_dict, validate_assumptions)


def test_default_validates(model):
    rep = validate_assumptions(model)
    assert rep.passed, rep.summary()
    assert model.v2(0.0) == 0.0
    assert abs(model.v1(0.0)) <= 1e-12


def test_default_crossing_data(model):
    cd = crossing_data(model)
    assert cd.x_star == pytest.approx(-2.0, abs=1e-12)
    assert abs(model.v1(cd.x_star)) <= 1e-10
    assert cd.tau0 == pytest.approx(2.0, abs=1e-8)
    assert cd.tau1 == pytest.approx(2.0, abs=1e-8)
    assert cd.tau2 == pytest.approx(1.0, abs=1e-8)


def test_sign_pattern_sampled(model):
    cd = crossing_data(model)
    xs = np.linspace(cd.x_star, 0, 102)[1:-1]
    assert np.all(model.v1(xs) < 0) and np.all(model.v2(xs) > 0)


@pytest.mark.parametrize("params", [dict(v2_inf=2.0, v2_length=0.5), dict(half_width=1.5, well_width=1.2),
                                    dict(v1_inf=0.7)])
def test_slopes_match_analytic_derivatives(params):
    m = gaussian_tanh_model(**params)
    p = m.parameters
    cd = crossing_data(m)
    assert cd.tau1 == pytest.approx(2 * p["v1_inf"] * p["half_width"] / p["well_width"] ** 2, abs=1e-8)
    assert cd.tau2 == pytest.approx(p["v2_inf"] / p["v2_length"], abs=1e-8)
    assert cd.tau0 == pytest.approx(float(-m.dv1(cd.x_star)), abs=1e-8)
    assert cd.x_star == pytest.approx(-2 * p["half_width"], abs=1e-10)


def _custom(v1, v2, family="gaussian_tanh"):
    base = default_model()
    return PotentialModel(v1=v1, v2=v2, a0=base.a0, a1=base.a1, family=family,
                          parameters=base.parameters)


def test_shifted_v2_fails_named_clause(model):
    m = _custom(model.v1, lambda x: model.v2(x) + 1.0)
    rep = validate_assumptions(m)
    assert not rep.clause("V2(0)=0").passed
    with pytest.raises(ModelValidationError, match="V2"):
        crossing_data(m)


def test_constant_v1_fails_sign_clause(model):
    m = _custom(lambda x: np.ones_like(np.asarray(x, dtype=float)), model.v2)
    rep = validate_assumptions(m)
    assert not rep.clause("V1<0<V2 on (x*,0)").passed
    assert not rep.clause("x* exists").passed


def test_custom_family_not_certified(model):
    m = _custom(model.v1, model.v2, family="custom")
    assert not validate_assumptions(m).clause("holomorphic closed form").passed


def test_every_clause_reported(model):
    names = [c.name for c in validate_assumptions(model).clauses]
    for required in ("V1(0)=0", "V2(0)=0", "x* exists", "V1>0 and V2>0 on (-inf,x*)",
                     "V1<0<V2 on (x*,0)", "V2<0<V1 on (0,+inf)", "tau1=V1'(0)>0",
                     "tau2=-V2'(0)>0", "tau0=-V1'(x*)>0"):
        assert required in names


def test_crossing_data_invariants():
    with pytest.raises(ModelValidationError):
        CrossingData(1.0, 1.0, 1.0, 1.0)
    with pytest.raises(ModelValidationError):
        CrossingData(-1.0, 1.0, 0.0, 1.0)


def test_json_round_trip(tmp_path, model):
    doc = model_to_dict(model)
    path = tmp_path / "m.json"
    path.write_text(json.dumps(doc))
    m2 = load_model(path)
    xs = np.linspace(-5, 5, 11)
    assert np.array_equal(m2.v1(xs), model.v1(xs))
    assert m2.domain_box == model.domain_box


def test_model_document_errors():
    with pytest.raises(ValueError):
        model_from_dict({"family": "nope"})
    with pytest.raises(ValueError):
        model_from_dict({"family": "gaussian_tanh", "domain_box": [1, 2]})
    with pytest.raises(ValueError):
        gaussian_tanh_model(bogus=1.0)


def test_box_limits_flat(model):
    for j in (1, 2):
        for end in model.domain_box:
            assert abs(model.dv(j)(end)) <= 1e-8


def test_with_coupling(model):
    m0 = model.with_coupling(0.0)
    assert m0.decoupled and not model.decoupled
    assert m0.a0(np.array([0.3]))[0] == 0.0
