import json
import math
from fractions import Fraction
from typing import Iterable, List, Tuple, Union

ExtendedRational = Union[Fraction, float]


def parse_fraction(text) -> Fraction:
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError) as e:
        raise ValueError(f"not a rational number: {text!r}") from e


def parse_vector(text: str) -> Tuple[Fraction, ...]:
    parts = [p for p in str(text).split(",") if p.strip()]
    if not parts:
        raise ValueError("empty rational vector")
    return tuple(parse_fraction(p) for p in parts)


def parse_complex_vector(text: str) -> List[complex]:
    parts = [p for p in str(text).split(",") if p.strip()]
    try:
        return [complex(p.strip().replace(" ", "")) for p in parts]
    except ValueError as e:
        raise ValueError(f"not a complex vector: {text!r}") from e


def format_rational(value) -> str:
    """Exact rationals always serialize as "p/q"; infinity as "inf"."""
    if value is None:
        return None
    if isinstance(value, float):
        if math.isinf(value) and value > 0:
            return "inf"
        raise ValueError(f"refusing to serialize float {value!r} as exact")
    f = Fraction(value)
    return f"{f.numerator}/{f.denominator}"


def format_vector(values: Iterable) -> List[str]:
    return [format_rational(v) for v in values]


def as_fraction_vector(values: Iterable) -> Tuple[Fraction, ...]:
    return tuple(Fraction(v) for v in values)


def dump_json(payload) -> str:
    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
