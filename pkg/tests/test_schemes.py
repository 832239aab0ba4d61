import json
import math

import pytest

from cyclosgp.schemes import (
    TABLE_HEADERS,
    catalog_json,
    find_scheme,
    format_table,
    hawk_beta,
    margin,
    scheme_catalog,
    table_rows,
)


def test_catalog_size_and_lookup():
    cat = scheme_catalog()
    assert len(cat) == 12
    s = find_scheme("ml-kem-1024")
    assert (s.d, s.n, s.q, s.threshold) == (4, 256, 3329, 1664.5)
    s = find_scheme("Hawk-512")
    assert s.n == 512 and s.sigma_ver == 1.425 and round(s.threshold) == 91
    s = find_scheme("NTRU-HPS-4096-821")
    assert (s.n, s.q, s.threshold) == (820, 4096, 2048)
    with pytest.raises(KeyError):
        find_scheme("nonexistent")


def test_tower_k_iff_power_of_two():
    for s in scheme_catalog():
        pow2 = s.n & (s.n - 1) == 0
        assert (s.tower_k is not None) == pow2
        assert s.formula_only == (not pow2)


def test_hawk_beta():
    assert hawk_beta(256, 1.042) == pytest.approx(47, abs=0.5)
    assert hawk_beta(1024, 1.571) == pytest.approx(142, abs=0.5)
    assert hawk_beta(1, 1) == pytest.approx(math.sqrt(8))


@pytest.mark.parametrize("spec", scheme_catalog(), ids=lambda s: s.name)
def test_formula_rows_match_printed(spec):
    r = margin(spec)
    assert r.gamma_th == pytest.approx(spec.printed_gamma_th, abs=0.1)
    assert r.gamma_99 == pytest.approx(spec.printed_gamma_99, abs=1.0)
    # printed margins are rounded to 2 significant figures, or 2 decimals below 10
    tol = 0.01 if spec.printed_margin < 10 else 1.0
    assert r.margin == pytest.approx(spec.printed_margin, abs=tol)


def test_margin_examples():
    r = margin(find_scheme("ML-KEM-1024"))
    assert (round(r.gamma_th, 1), round(r.gamma_99)) == (20.6, 103)
    assert round(r.margin) == 16
    hawk = find_scheme("Hawk-256")
    assert margin(hawk).margin == pytest.approx(0.65, abs=0.01)
    assert not margin(hawk).broken
    assert margin(hawk, "kappa_emp").margin == pytest.approx(2.02, abs=0.02)
    assert margin(find_scheme("Falcon-1024")).margin == pytest.approx(63, abs=1)


def test_empirical_mode_needs_stats():
    with pytest.raises(ValueError):
        margin(find_scheme("Hawk-256"), "empirical")
    with pytest.raises(ValueError):
        margin(find_scheme("Hawk-256"), "mystery")


def test_table_text_and_json():
    text = format_table(table_rows())
    lines = text.splitlines()
    assert lines[0].split() == list(TABLE_HEADERS)
    assert len(lines) == 2 + 12 + 1
    d = json.loads(catalog_json())
    assert d["schema_version"] == 1 and len(d["schemes"]) == 12
