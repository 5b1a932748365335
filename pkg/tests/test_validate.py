import re

import pytest

from conftest import CORPUS, epidemic_text
from flyfast.lang import parse_formula_file, parse_system_spec, resolve_atoms, validate
from flyfast.lang.errors import ERROR_CLASSES, SpecError, UnknownAtomError
from flyfast.lang.parser import parse_spec_unchecked

INVALID = sorted((CORPUS / "invalid").iterdir())


def codes(text):
    return [d.code for d in validate(parse_spec_unchecked(text))]


def test_epidemic_is_clean():
    assert codes(epidemic_text()) == []


def test_duplicate_probability_definition():
    assert codes(epidemic_text() + "\nloss :: 0.3;") == ["duplicate-prob-def"]


def test_division_is_only_a_warning():
    text = "S := a.I; I := b.S; a :: (frc I)/(frc S); b :: 0.5; init <S[1]>"
    diags = validate(parse_spec_unchecked(text))
    assert [(d.code, d.severity) for d in diags] == [("continuity-warning", "warning")]
    parse_system_spec(text)  # warnings do not stop parsing


def test_all_rules_reported_in_order():
    text = """
    A := x.B + x.A;
    C := y.A;
    C := z.A;
    y :: 2 * frc Q;
    w :: 0.1;
    label local p = A;
    label global p = frc A > 0.5;
    init <A[-1]>;
    """
    assert codes(text) == [
        "duplicate-state-def", "undefined-state", "duplicate-action",
        "unused-prob-def", "missing-prob-def", "missing-prob-def",
        "literal-range", "undefined-state", "atom-clash", "negative-count",
        "init-error",
    ]


def test_validation_is_deterministic():
    text = "A := x.B + x.A; y :: 3; label local p = Z; init <A[0]>"
    runs = [[(d.code, d.line, d.col, d.message) for d in validate(parse_spec_unchecked(text))]
            for _ in range(5)]
    assert all(r == runs[0] for r in runs) and runs[0]


def test_diagnostic_codes_map_to_error_classes():
    for text in ["A := x.B; x :: 0.5; init <A[1]>", "A := x.A; init <A[1]>"]:
        for d in validate(parse_spec_unchecked(text)):
            assert isinstance(d.to_exception(), ERROR_CLASSES[d.code])


def test_unknown_atom_resolution(epidemic):
    for _, phi in parse_formula_file("P<=0.5 [ true U<=3 i ]\nLowInf | r"):
        resolve_atoms(phi, epidemic)
    with pytest.raises(UnknownAtomError):
        resolve_atoms(parse_formula_file("P<=0.5 [ X zombie ]")[0][1], epidemic)


@pytest.mark.parametrize("path", INVALID, ids=lambda p: p.name)
def test_invalid_corpus_raises_designated_class(path, epidemic):
    raw = path.read_bytes()
    want = re.search(rb"expect: (\w+)", raw).group(1).decode()
    with pytest.raises(SpecError) as ei:
        if path.suffix == ".pop":
            parse_system_spec(raw)
        else:
            for _, phi in parse_formula_file(raw):
                resolve_atoms(phi, epidemic)
    assert type(ei.value).__name__ == want


def test_invalid_corpus_covers_every_error_class():
    wanted = {re.search(rb"expect: (\w+)", p.read_bytes()).group(1).decode() for p in INVALID}
    assert wanted == {cls.__name__ for cls in ERROR_CLASSES.values()}
