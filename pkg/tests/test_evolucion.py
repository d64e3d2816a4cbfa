from dataclasses import replace

import numpy as np
import pytest

from codec_abc import parsear_abc
from errores import ConfiguracionInvalida, FormasIncompatibles
from evolucion import (
    COLUMNAS_REGISTRO,
    ConfigGA,
    comparar_tiempos,
    cruzar,
    ejecutar,
    inicializar_poblacion,
    mutar,
    reproducir,
    visualizar_tiempos,
)
from fitness import ConfigCompuesto, ConfigReglas, EvaluadorGA1, EvaluadorGA2
from indice_corpus import SILENCIO, construir_indice, probabilidad_nota
from matriz_piano import Cromosoma
from modelo_oyente import RedOyente


def _config(**cambios):
    base = ConfigGA(iteraciones=20, poblacion=6, canales=2, pasos=16, semilla=3)
    return replace(base, **cambios)


def test_config_por_defecto_y_validacion():
    config = ConfigGA()
    assert (config.iteraciones, config.poblacion, config.tasa_cruce, config.tasa_mutacion) == (3600, 15, 0.5, 0.1)
    assert config.canales == 2
    for cambios in ({"poblacion": 1}, {"tasa_cruce": 1.5}, {"tasa_mutacion": -0.1},
                    {"pasos": 0}, {"canales": 0}, {"modo": "GA3"}, {"iteraciones": 0}):
        with pytest.raises(ConfiguracionInvalida):
            ConfigGA(**cambios)
    assert ConfigGA.desde_parametros({"pasos": 32, "modo": "GA2"}).modo == "GA2"


def test_poblacion_inicial_degenerada():
    indice = construir_indice([parsear_abc("X:1\nL:1/4\nK:C\nC C C")])
    poblacion = inicializar_poblacion(_config(canales=1), indice, np.random.default_rng(0))
    assert len(poblacion) == 6
    for cromosoma in poblacion:
        assert cromosoma.forma == (1, 16)
        assert (cromosoma.genes == 40).all()


def test_poblacion_inicial_sin_repetidos_y_reproducible(indice_toy):
    config = _config(canales=3, poblacion=10)
    a = inicializar_poblacion(config, indice_toy, np.random.default_rng(1))
    b = inicializar_poblacion(config, indice_toy, np.random.default_rng(1))
    assert a == b
    for cromosoma in a:
        for paso in range(cromosoma.pasos):
            sonando = [g for g in cromosoma.genes[:, paso] if g]
            assert len(sonando) == len(set(sonando))


def test_poblacion_inicial_sigue_la_distribucion():
    indice = construir_indice([parsear_abc("X:1\nL:1/4\nK:C\nC C G z E C |]")])
    config = _config(canales=1, pasos=500, poblacion=40)
    genes = np.concatenate([c.genes.ravel() for c in inicializar_poblacion(config, indice, np.random.default_rng(2))])
    total = genes.size
    for clave in indice.distribucion.conteos:
        gen = 0 if clave == SILENCIO else clave + 1
        p = probabilidad_nota(indice, clave)
        error_estandar = np.sqrt(p * (1 - p) / total)
        assert abs(np.mean(genes == gen) - p) <= 3 * error_estandar


def test_cruce_por_la_mitad():
    mejor1 = Cromosoma([[10, 10, 10, 10], [0, 0, 0, 0]])
    mejor2 = Cromosoma([[20, 20, 20, 20], [0, 0, 0, 0]])
    hijo = cruzar(mejor1, mejor2)
    assert hijo.genes[0].tolist() == [10, 10, 20, 20]
    assert cruzar(mejor1, mejor1) == mejor1


def test_cruce_conserva_la_primera_mitad(indice_toy):
    rng = np.random.default_rng(6)
    for pasos in (1, 7, 16):
        padres = inicializar_poblacion(_config(pasos=pasos, poblacion=2), indice_toy, rng)
        hijo = cruzar(*padres)
        mitad = pasos // 2
        assert np.array_equal(hijo.genes[:, :mitad], padres[0].genes[:, :mitad])
        assert np.array_equal(hijo.genes[:, mitad:], padres[1].genes[:, mitad:])


def test_cruce_con_formas_distintas():
    with pytest.raises(FormasIncompatibles):
        cruzar(Cromosoma(np.zeros((2, 4))), Cromosoma(np.zeros((2, 5))))


def test_mutacion_tasa_cero_y_uno(indice_toy):
    rng = np.random.default_rng(0)
    hijo = Cromosoma([[40, 42, 44, 45], [28, 23, 0, 0]])
    assert mutar(hijo, 0.0, indice_toy, rng) == hijo

    lleno = Cromosoma([[40, 42, 44, 45], [28, 23, 40, 40]])
    assert not mutar(lleno, 1.0, indice_toy, rng).genes.any()

    vacio = Cromosoma(np.zeros((2, 8)))
    activado = mutar(vacio, 1.0, indice_toy, rng)
    assert activado.genes.all()
    validos = {t + 1 for t in indice_toy.distribucion.conteos if t != SILENCIO}
    assert set(activado.genes.ravel().tolist()) <= validos

    with pytest.raises(ConfiguracionInvalida):
        mutar(hijo, 1.5, indice_toy, rng)


def test_frecuencia_de_mutacion(indice_toy):
    rng = np.random.default_rng(10)
    genes = np.zeros((1, 10_000), dtype=np.int16)
    genes[0, ::2] = 40
    hijo = Cromosoma(genes)
    mutado = mutar(hijo, 0.1, indice_toy, rng)
    cambios = np.mean(mutado.genes != hijo.genes)
    error_estandar = np.sqrt(0.1 * 0.9 / genes.size)
    assert abs(cambios - 0.1) <= 3 * error_estandar


def test_reproducir_mantiene_elite_y_tamano(indice_toy):
    config = _config()
    rng = np.random.default_rng(4)
    mejor1, mejor2 = inicializar_poblacion(replace(config, poblacion=2), indice_toy, rng)
    siguiente = reproducir(mejor1, mejor2, config, indice_toy, rng)
    assert len(siguiente) == config.poblacion
    assert siguiente[0] is mejor1 and siguiente[1] is mejor2
    assert all(c.forma == (2, 16) for c in siguiente)


def test_evaluador_constante(indice_toy):
    mejor, registro = ejecutar(_config(), lambda cromosoma: 1.25, indice_toy)
    assert registro.mejores == [1.25] * 20
    assert len(registro) == 20
    assert mejor.forma == (2, 16)


def test_elitismo_monotono(indice_toy):
    rng_evaluador = np.random.default_rng(0)
    pesos = rng_evaluador.normal(size=(2, 16))

    def evaluador(cromosoma):
        return float(np.sum(pesos * (cromosoma.genes > 0)) - 0.01 * cromosoma.genes.sum())

    _, registro = ejecutar(_config(iteraciones=60), evaluador, indice_toy)
    mejores = registro.mejores
    assert all(b >= a for a, b in zip(mejores, mejores[1:]))
    for cromosoma in registro.poblacion_final:
        assert cromosoma.forma == (2, 16)
    assert len(registro.poblacion_final) == 6


def test_ejecucion_reproducible(indice_toy):
    evaluador = EvaluadorGA1(indice_toy, ConfigReglas(ticks_compas=8))
    mejor_a, registro_a = ejecutar(_config(), evaluador, indice_toy)
    mejor_b, registro_b = ejecutar(_config(), evaluador, indice_toy)
    assert mejor_a == mejor_b
    assert registro_a.mejores == registro_b.mejores
    assert registro_a.poblacion_final == registro_b.poblacion_final


def test_el_mejor_devuelto_es_el_mejor_registrado(indice_toy):
    evaluador = EvaluadorGA1(indice_toy, ConfigReglas(ticks_compas=8))
    mejor, registro = ejecutar(_config(iteraciones=30), evaluador, indice_toy)
    assert evaluador(mejor).objetivo == max(registro.mejores)


def test_ga1_mejora_en_casi_todas_las_semillas(indice_toy):
    evaluador = EvaluadorGA1(indice_toy, ConfigReglas(ticks_compas=16))
    mejoras = 0
    for semilla in range(20):
        config = ConfigGA(iteraciones=300, poblacion=15, canales=2, pasos=16, semilla=semilla)
        _, registro = ejecutar(config, evaluador, indice_toy)
        mejores = registro.mejores
        assert all(b >= a for a, b in zip(mejores, mejores[1:])), semilla
        mejoras += mejores[-1] > mejores[0]
    assert mejoras >= 18


def test_objetivo_en_todos_los_desgloses_registrados(indice_toy):
    evaluador = EvaluadorGA1(indice_toy, ConfigReglas(ticks_compas=8))
    _, registro = ejecutar(_config(iteraciones=60, poblacion=10), evaluador, indice_toy)
    assert len(registro.desgloses) == 60
    for desglose in registro.desgloses:
        esperado = desglose.score + desglose.epsilon / (desglose.epsilon + desglose.cost)
        assert abs(desglose.objetivo - esperado) <= 1e-12
        if desglose.cost == 0:
            assert desglose.objetivo == desglose.score + 1


def _red_constante(valor):
    red = RedOyente(2)
    red.parametros["fc_b"] = np.asarray(float(valor))
    return red


def test_ga2_con_pesos_degenerados_elige_el_mismo_mejor_que_ga1(indice_toy):
    reglas = ConfigReglas(ticks_compas=8)
    # Norma potencia de dos y por encima de cualquier objetivo: x1 / norma es exacto
    compuesto = ConfigCompuesto(w1=1.0, w2=0.0, w3=0.0, norma_gramatica=1024.0)
    ga2 = EvaluadorGA2(indice_toy, reglas, _red_constante(35), _red_constante(80), compuesto)
    for semilla in range(3):
        config = _config(iteraciones=80, poblacion=15, semilla=semilla)
        mejor_ga1, registro_ga1 = ejecutar(config, EvaluadorGA1(indice_toy, reglas), indice_toy)
        mejor_ga2, registro_ga2 = ejecutar(replace(config, modo="GA2"), ga2, indice_toy)
        assert mejor_ga2 == mejor_ga1
        assert registro_ga2.mejores == [m / 1024.0 for m in registro_ga1.mejores]
        assert registro_ga2.poblacion_final == registro_ga1.poblacion_final


def test_registro_csv(tmp_path, indice_toy):
    evaluador = EvaluadorGA1(indice_toy, ConfigReglas(ticks_compas=8))
    _, registro = ejecutar(_config(iteraciones=5), evaluador, indice_toy)
    df = registro.a_dataframe()
    assert list(df.columns) == COLUMNAS_REGISTRO
    assert df["iteration"].tolist() == [0, 1, 2, 3, 4]
    assert (df["elapsed_ms"].diff().dropna() >= 0).all()
    assert (df["best_fitness"] >= df["mean_fitness"]).all()
    registro.guardar_csv(tmp_path / "runlog.csv")
    assert (tmp_path / "runlog.csv").read_text().splitlines()[0] == ",".join(COLUMNAS_REGISTRO)


def test_comparar_tiempos(tmp_path, indice_toy):
    reglas = ConfigReglas(ticks_compas=8)
    evaluadores = {"GA1": EvaluadorGA1(indice_toy, reglas), "GA2": EvaluadorGA1(indice_toy, reglas)}
    tabla = comparar_tiempos(_config(iteraciones=3), evaluadores, indice_toy, longitudes=(8, 16))
    assert tabla[["modo", "pasos"]].values.tolist() == [["GA1", 8], ["GA1", 16], ["GA2", 8], ["GA2", 16]]
    assert (tabla["segundos"] > 0).all()
    visualizar_tiempos(tabla, tmp_path / "tiempos.png")
    assert (tmp_path / "tiempos.png").exists()
