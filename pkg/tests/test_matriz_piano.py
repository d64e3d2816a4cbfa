from fractions import Fraction

import matplotlib.pyplot as plt
import numpy as np
import pytest

from codec_abc import EventoNota, Pieza, parsear_abc
from errores import DemasiadasVoces, MatrizMalformada
from matriz_piano import (
    Cromosoma,
    MatrizPiano,
    canonizar,
    cargar_matriz_csv,
    contar_notas_matriz,
    corridas,
    cromosoma_a_matriz,
    cromosoma_a_pieza,
    guardar_matriz_csv,
    matriz_a_cromosoma,
    pieza_a_cromosoma,
    pieza_a_matriz,
    validar_cromosoma,
    visualizar_matriz,
)


def _cromosoma_aleatorio(rng, canales, pasos, densidad=0.6):
    genes = np.zeros((canales, pasos), dtype=np.int16)
    for paso in range(pasos):
        sonando = rng.random(canales) < densidad
        teclas = rng.choice(np.arange(1, 89), size=canales, replace=False)
        genes[:, paso] = np.where(sonando, teclas, 0)
    return Cromosoma(genes)


def test_pieza_vacia_da_matriz_de_ceros():
    matriz = pieza_a_matriz(Pieza(eventos=(), duracion_total=4))
    assert matriz.celdas.shape == (88, 4)
    assert not matriz.celdas.any()


def test_una_nota_ocupa_su_fila():
    pieza = Pieza(eventos=(EventoNota(0, 0, 39, 16),), duracion_total=16)
    celdas = pieza_a_matriz(pieza).celdas
    assert celdas[39, :16].all()
    assert celdas.sum() == 16


def test_acorde_en_tres_filas():
    celdas = pieza_a_matriz(parsear_abc("X:1\nK:C\nL:1/8\n[CEG]")).celdas
    for fila in (39, 43, 46):
        assert celdas[fila, :8].all()
    assert celdas.sum() == 24


def test_genes_a_matriz():
    assert not cromosoma_a_matriz(Cromosoma(np.zeros((2, 5)))).celdas.any()

    celdas = cromosoma_a_matriz(Cromosoma([[40, 40, 0, 40]])).celdas
    assert celdas[39].tolist() == [1, 1, 0, 1]
    assert celdas.sum() == 3

    celdas = cromosoma_a_matriz(Cromosoma([[44, 0], [40, 0]])).celdas
    assert np.flatnonzero(celdas[:, 0]).tolist() == [39, 43]


def test_matriz_a_cromosoma_ordena_de_agudo_a_grave():
    celdas = np.zeros((88, 2), dtype=np.uint8)
    celdas[[10, 50, 30], 0] = 1
    celdas[20, 1] = 1
    cromosoma = matriz_a_cromosoma(MatrizPiano(celdas), 3)
    assert cromosoma.genes[:, 0].tolist() == [51, 31, 11]
    assert cromosoma.genes[:, 1].tolist() == [21, 0, 0]


def test_demasiadas_voces():
    celdas = np.zeros((88, 3), dtype=np.uint8)
    celdas[[1, 2, 3], 2] = 1
    with pytest.raises(DemasiadasVoces) as error:
        matriz_a_cromosoma(MatrizPiano(celdas), 2)
    assert error.value.columna == 2


def test_matriz_vacia_da_genes_nulos():
    assert not matriz_a_cromosoma(MatrizPiano.vacia(6), 2).genes.any()


def test_ida_y_vuelta_con_convenio_de_canales():
    rng = np.random.default_rng(0)
    for _ in range(50):
        canonico = canonizar(_cromosoma_aleatorio(rng, 3, 12))
        matriz = cromosoma_a_matriz(canonico)
        assert matriz.celdas.max() <= 1
        assert matriz.celdas.sum(axis=0).max() <= 3
        assert matriz_a_cromosoma(matriz, 3) == canonico


def test_cromosoma_rechaza_genes_invalidos():
    with pytest.raises(ValueError):
        Cromosoma([[89, 0]])
    with pytest.raises(ValueError):
        Cromosoma([[-1, 0]])
    with pytest.raises(ValueError):
        Cromosoma([[40, 5], [40, 6]])
    with pytest.raises(ValueError):
        MatrizPiano(np.full((88, 2), 2))
    with pytest.raises(ValueError):
        MatrizPiano(np.zeros((87, 2)))


def test_cromosoma_es_inmutable():
    cromosoma = Cromosoma([[40, 41]])
    with pytest.raises(ValueError):
        cromosoma.genes[0, 0] = 1


def test_corridas_y_notas():
    assert corridas([5, 5, 0, 5, 7, 7]) == [(0, 2, 5), (3, 4, 5), (4, 6, 7)]
    assert corridas([]) == []
    cromosoma = Cromosoma([[5, 5, 0, 5, 7, 7], [0, 3, 3, 3, 0, 0]])
    assert contar_notas_matriz(cromosoma_a_matriz(cromosoma)) == 4


def test_notas_no_dependen_del_reparto_de_canales():
    a = Cromosoma([[50, 50, 50], [40, 41, 41]])
    b = Cromosoma([[50, 41, 41], [40, 50, 50]])
    assert cromosoma_a_matriz(a) == cromosoma_a_matriz(b)
    assert contar_notas_matriz(cromosoma_a_matriz(b)) == 3


def test_cromosoma_a_pieza_y_vuelta():
    cromosoma = Cromosoma([[52, 52, 0, 48, 48, 48, 0, 0], [40, 40, 0, 40, 40, 0, 0, 0]])
    pieza = cromosoma_a_pieza(cromosoma, compas=(2, 4), unidad="1/16")
    assert pieza.duracion_total == 8
    assert pieza.unidad == Fraction(1, 16)
    assert [(e.inicio, e.voz, e.tono, e.duracion) for e in pieza.eventos] == [
        (0, 0, 51, 2),
        (0, 1, 39, 2),
        (3, 0, 47, 3),
        (3, 1, 39, 2),
    ]
    assert pieza_a_cromosoma(pieza, canales=2) == cromosoma


def test_pieza_a_cromosoma_usa_la_polifonia_maxima(piezas_corpus):
    escala, dos_voces, acordes = piezas_corpus
    assert pieza_a_cromosoma(escala).canales == 1
    assert pieza_a_cromosoma(dos_voces).canales == 2
    assert pieza_a_cromosoma(acordes).canales == 3


def test_csv_bit_a_bit(tmp_path):
    rng = np.random.default_rng(3)
    matriz = MatrizPiano((rng.random((88, 37)) < 0.2).astype(np.uint8))
    ruta = guardar_matriz_csv(matriz, tmp_path / "matriz.csv")
    assert ruta.read_text().splitlines()[0] == "tick," + ",".join(f"k{i}" for i in range(88))
    assert cargar_matriz_csv(ruta) == matriz


def test_csv_con_celdas_no_binarias(tmp_path):
    ruta = tmp_path / "mala.csv"
    ruta.write_text("tick," + ",".join(f"k{i}" for i in range(88)) + "\n0," + ",".join(["2"] * 88) + "\n")
    with pytest.raises(MatrizMalformada) as error:
        cargar_matriz_csv(ruta)
    assert error.value.codigo_salida == 2


@pytest.mark.parametrize("texto", [
    "tick,nota\n0,1\n",
    "",
    "tick," + ",".join(f"k{i}" for i in range(88)) + "\n3," + ",".join(["0"] * 88) + "\n",
    "tick," + ",".join(f"k{i}" for i in range(88)) + "\n0," + ",".join(["0"] * 88) + "\n1," + ",".join(["0"] * 90) + "\n",
])
def test_csv_de_matriz_malformado(tmp_path, texto):
    ruta = tmp_path / "mala.csv"
    ruta.write_text(texto, encoding="utf-8")
    with pytest.raises(MatrizMalformada):
        cargar_matriz_csv(ruta)


def test_validar_cromosoma():
    assert validar_cromosoma(np.array([[50, 0], [40, 0]]))["valido"]

    resultado = validar_cromosoma(np.array([[40, 0], [50, 0]]))
    assert resultado["valido"]
    assert resultado["advertencias"]

    resultado = validar_cromosoma(np.array([[40, 90], [40, 0]]), canales_esperados=3)
    assert not resultado["valido"]
    assert len(resultado["errores"]) == 3

    assert validar_cromosoma(np.zeros((2, 4)))["advertencias"] == ["El cromosoma no contiene ninguna nota"]


def test_visualizar_matriz(tmp_path):
    matriz = cromosoma_a_matriz(Cromosoma([[52, 52, 0, 48], [40, 40, 40, 0]]))
    figura = visualizar_matriz(matriz, tmp_path / "matriz.png")
    assert (tmp_path / "matriz.png").exists()
    plt.close(figura)
