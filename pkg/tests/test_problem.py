import numpy as np
import pytest

from quasidual.errors import InvalidSpec, NonPositiveField
from quasidual.grid import Mesh, first_eigenfunction
from quasidual.problem import (Constant, Cosine, CriticalType, PowerOfDistance, ProblemSpec,
                               Sublinear, boundary_exponent, classify_duality, compat_integral,
                               in_uniqueness_regime, manufactured_spec, parse_spec, validate)

from conftest import make_spec


def test_validate_accepts_standard_specs(sublinear_spec, critical_spec):
    assert validate(sublinear_spec).valid
    assert validate(critical_spec).valid


@pytest.mark.parametrize("kwargs,hyp", [
    (dict(gamma=1.0), "gamma"),
    (dict(gamma=0.5), "gamma"),
    (dict(sigma=-1.0), "h"),
    (dict(p=1.0), "p"),
    (dict(p=0.0), "p"),
    (dict(case="critical", q=2.0), "q"),
    (dict(case="critical", b=Cosine(1.0)), "b"),
    (dict(b=Constant(-1.0)), "b"),
    (dict(lam=-0.1), "lambda"),
])
def test_validate_names_violated_hypothesis(kwargs, hyp):
    with pytest.raises(InvalidSpec) as info:
        validate(make_spec(**kwargs))
    assert info.value.hypothesis == hyp


def test_condition_d_for_power_h():
    assert validate(make_spec(gamma=2, sigma=1.5)).condition_d
    assert not validate(make_spec(gamma=2, sigma=0.5)).condition_d


def test_zero_source_and_sign_changing_b_are_noted():
    assert any("b == 0" in n for n in validate(make_spec(b=Constant(0.0))).notes)
    rep = validate(make_spec(b=Cosine(1.0)))
    assert rep.valid and any("sign-changing" in n for n in rep.notes)


def test_uniqueness_regime():
    assert in_uniqueness_regime(make_spec(case="critical"))
    assert in_uniqueness_regime(make_spec(sigma=1.5))
    assert not in_uniqueness_regime(make_spec(sigma=0.5))
    assert not in_uniqueness_regime(make_spec(b=Cosine(1.0)))


@pytest.mark.parametrize("sigma", [0.25, 1.0, 2.5])
def test_boundary_exponent_recovers_power(sigma):
    mesh = Mesh(1, 255)
    h = PowerOfDistance(1.0, sigma).evaluate(mesh)
    assert boundary_exponent(h, mesh) == pytest.approx(sigma, abs=1e-12)


def test_manufactured_spec_is_valid():
    spec = manufactured_spec(255, 2.0)
    rep = validate(spec)
    # h* ~ d^(1 + gamma) near the boundary
    assert rep.condition_d
    assert boundary_exponent(spec.h_values, spec.mesh) == pytest.approx(3.0, abs=1e-2)


def test_lambda_scales_b():
    spec = make_spec(lam=2.5)
    np.testing.assert_allclose(spec.b_values, 2.5)


# compatibility


def closed_form_convergent(gamma, sigma):
    # int_0 d^sigma d^(1-gamma) converges iff sigma + 1 - gamma > -1
    return sigma > gamma - 2


@pytest.mark.parametrize("gamma,sigma", [(2.0, 0.5), (2.0, -0.5), (3.0, 1.5), (3.0, 0.5),
                                         (1.5, 0.0), (4.0, 2.2), (4.0, 1.8)])
def test_compat_matches_closed_form(gamma, sigma):
    spec = make_spec(gamma=gamma, sigma=sigma, n=1023)
    reports = classify_duality(spec, None, levels=4)
    verdicts = {r.classification for r in reports}
    assert len(verdicts) == 1
    assert reports[0].convergent == closed_form_convergent(gamma, sigma)


def test_compat_gamma_just_above_one():
    spec = make_spec(gamma=1.0000001, sigma=0.0, n=1023)
    assert compat_integral(spec, levels=4).convergent


def test_compat_scaling_invariant():
    spec = make_spec(gamma=3.0, sigma=0.5, n=511)
    base = compat_integral(spec, levels=4)
    for c in (0.1, 10.0):
        rep = compat_integral(spec, lambda x, c=c: c * np.sin(np.pi * x[:, 0]), levels=4)
        assert rep.classification == base.classification
        np.testing.assert_allclose(rep.ratios, base.ratios, rtol=1e-12)


@pytest.mark.parametrize("sigma", [0.3, 1.0])
def test_compat_divergence_monotone_in_gamma(sigma):
    # once divergent for some gamma, stays divergent for larger gamma
    verdicts = [compat_integral(make_spec(gamma=g, sigma=sigma, n=1023), levels=4).convergent
                for g in (1.5, 2.0, 2.5, 3.0, 3.5, 4.0)]
    first_div = verdicts.index(False) if False in verdicts else len(verdicts)
    assert all(not v for v in verdicts[first_div:])


def test_compat_accepts_gridfunction(sublinear_spec):
    phi, _ = first_eigenfunction(sublinear_spec.mesh)
    a = compat_integral(sublinear_spec, phi, levels=3)
    b = compat_integral(sublinear_spec, None, levels=3)
    assert a.classification == b.classification == "convergent"


def test_compat_rejects_nonpositive_field(sublinear_spec):
    with pytest.raises(NonPositiveField):
        compat_integral(sublinear_spec, lambda x: np.cos(np.pi * x[:, 0]), levels=3)


def test_compat_needs_three_levels(sublinear_spec):
    with pytest.raises(ValueError):
        compat_integral(sublinear_spec, levels=2)


def test_compat_2d():
    good = make_spec(dimension=2, n=15, gamma=2.0, sigma=1.5)
    bad = make_spec(dimension=2, n=15, gamma=3.0, sigma=0.5)
    assert compat_integral(good, levels=4).convergent
    assert not compat_integral(bad, levels=4).convergent


# spec files


def test_parse_spec_full():
    spec = parse_spec("""
        # comment
        dimension = 2
        N = 9
        gamma = 2.5
        lambda = 0.5
        h.kind = power
        h.c = 2
        h.sigma = 1.0
        case = f1
        p = 0.3
        b.kind = cosine
        b.value = 1.5   # inline comment
    """)
    assert spec.mesh == Mesh(2, 9)
    assert spec.gamma == 2.5 and spec.lam == 0.5
    assert spec.h_spec == PowerOfDistance(2.0, 1.0)
    assert spec.case == Sublinear(0.3, Cosine(1.5))


def test_parse_spec_defaults_and_overrides():
    spec = parse_spec("dimension=3\ngamma=2\nh.sigma=1.5\ncase=critical\n", ["gamma=3"])
    assert spec.mesh == Mesh(3, 15)
    assert spec.case == CriticalType(12.0, Constant(1.0))
    assert spec.gamma == 3.0


@pytest.mark.parametrize("text,hyp", [
    ("gamma=2\nh.sigma=1\ncase=f1\np=0.5\ncolour=red", "key"),
    ("gamma=2\nh.sigma=1\ncase=f1", "p"),
    ("gamma=abc\nh.sigma=1\ncase=f1\np=0.5", "gamma"),
    ("gamma=2\nh.sigma=1\ncase=f3\np=0.5", "case"),
    ("gamma=2\nh.sigma=1\ncase=critical", "q"),
    ("gamma=2\nh.sigma=1\ncase=f1\np=0.5\nb.kind=random", "b.kind"),
    ("gamma=2\nh.kind=table\ncase=f1\np=0.5", "h.kind"),
    ("gamma=2\nh.sigma=1\ncase=f1\np=0.5\nn=2", "mesh"),
    ("just some words", "syntax"),
])
def test_parse_spec_errors(text, hyp):
    with pytest.raises(InvalidSpec) as info:
        parse_spec(text)
    assert info.value.hypothesis == hyp
    assert hyp in str(info.value)


def test_describe_round_trip_fields():
    spec = ProblemSpec(2.0, PowerOfDistance(1.0, 1.5), Sublinear(0.5), Mesh(1, 31))
    d = spec.describe()
    assert d["gamma"] == 2.0 and d["n"] == 31 and d["case"] == "sublinear"
