import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from codec_abc import parsear_abc  # noqa: E402
from indice_corpus import construir_indice  # noqa: E402


# Tres piezas pequeñas con recuentos conocidos:
#   escala: C4 D4 E4 F4 G4 A4 B4 C5, negras (16 ticks), 2 compases
#   dos voces: melodía E4 G4 C5 G4 E4 C4 sobre C3 C3 G2
#   acordes: G4-B4-D5, F#4-A4-D5, G4-B4-D5 en 3/4
ESCALA = """X:1
T:Escala
M:4/4
L:1/4
K:C
C D E F | G A B c |]
"""

DOS_VOCES = """X:2
T:Dos voces
M:4/4
L:1/4
K:C
V:1
E G c G | E2 C2 |]
V:2
C,4 | C,2 G,,2 |]
"""

ACORDES = """X:3
T:Acordes
M:3/4
L:1/8
K:G
[GBd]2 [FAd]2 [GBd]2 |]
"""

TEXTOS_CORPUS = {"a_escala.abc": ESCALA, "b_dos_voces.abc": DOS_VOCES, "c_acordes.abc": ACORDES}


@pytest.fixture
def piezas_corpus():
    return [parsear_abc(texto) for texto in TEXTOS_CORPUS.values()]


@pytest.fixture
def indice_toy(piezas_corpus):
    return construir_indice(piezas_corpus)


@pytest.fixture
def dir_corpus(tmp_path):
    directorio = tmp_path / "corpus"
    directorio.mkdir()
    for nombre, texto in TEXTOS_CORPUS.items():
        (directorio / nombre).write_text(texto, encoding="utf-8")
    return directorio
