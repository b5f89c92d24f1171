"""
🧪 FIXTURES COMPARTIDOS - Valores de regresión congelados en tools/golden/

Si el archivo golden no existe (o QUADGAIN_UPDATE_GOLDEN=1), la prueba lo
registra y se marca como omitida; las ejecuciones siguientes comparan contra él.
"""

import json
import os
from pathlib import Path

import pytest

GOLDEN_DIR = Path(__file__).parent / "golden"


def _matches(expected, actual, abs_tol: float) -> bool:
    if isinstance(expected, float) or isinstance(actual, float):
        if expected is None or actual is None:
            return expected is actual
        return actual == pytest.approx(expected, abs=abs_tol, rel=abs_tol)
    return expected == actual


@pytest.fixture
def golden():
    """Compara un dict plano {clave: número | str | None} contra tools/golden/<name>.json"""
    def check(name: str, values: dict, abs_tol: float = 1e-9) -> None:
        path = GOLDEN_DIR / f"{name}.json"
        if not path.exists() or os.environ.get("QUADGAIN_UPDATE_GOLDEN") == "1":
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(json.dumps(values, indent=2, sort_keys=True) + "\n", encoding='utf-8')
            pytest.skip(f"📝 Valores golden registrados en {path.name}")

        expected = json.loads(path.read_text(encoding='utf-8'))
        assert sorted(expected) == sorted(values), f"Claves distintas en {path.name}"
        mismatches = {k: (expected[k], values[k]) for k in expected
                      if not _matches(expected[k], values[k], abs_tol)}
        assert not mismatches, f"Valores distintos de {path.name}: {mismatches}"

    return check
