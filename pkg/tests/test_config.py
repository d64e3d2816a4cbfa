from pathlib import Path

import pytest

from config import (
    PARAMETROS_GA,
    SECCIONES,
    cargar_configuracion,
    listar_configuracion,
    parsear_fraccion,
    validar_pipeline,
)
from errores import ConfiguracionInvalida


def test_valores_por_defecto():
    config = cargar_configuracion()
    assert config["ga1"] == dict(PARAMETROS_GA, modo="GA1")
    assert config["ga2"]["modo"] == "GA2"
    assert config["entrenamiento"]["oculto"] == 50
    assert config["pipeline"]["tamano_coleccion"] == 20
    # Los valores por defecto no se comparten entre llamadas
    config["ga1"]["iteraciones"] = 1
    assert cargar_configuracion()["ga1"]["iteraciones"] == 3600
    assert SECCIONES["ga1"]["iteraciones"] == 3600


def test_fichero_y_sobreescrituras(tmp_path):
    ruta = tmp_path / "composicion.ini"
    ruta.write_text(
        "[ga1]\niteraciones = 300\ntasa_cruce = 0.7\n\n"
        "[reglas]\nprohibir_tritono = no\ncompas = 3/4\n\n"
        "[compuesto]\nw1 = 1/2\n",
        encoding="utf-8",
    )
    config = cargar_configuracion(ruta, ["ga1.iteraciones=50", "entrenamiento.optimizador=gd"])
    assert config["ga1"]["iteraciones"] == 50
    assert config["ga1"]["tasa_cruce"] == 0.7
    assert config["reglas"]["prohibir_tritono"] is False
    assert config["reglas"]["compas"] == "3/4"
    assert config["compuesto"]["w1"] == 0.5
    assert config["entrenamiento"]["optimizador"] == "gd"


@pytest.mark.parametrize("sobreescritura", [
    "ga3.iteraciones=5",
    "ga1.generaciones=5",
    "ga1.iteraciones=muchas",
    "reglas.prohibir_tritono=quizas",
    "compuesto.w1=1/0",
    "ga1iteraciones=5",
    "ga1.iteraciones",
])
def test_sobreescrituras_invalidas(sobreescritura):
    with pytest.raises(ConfiguracionInvalida):
        cargar_configuracion(None, [sobreescritura])


def test_fichero_inexistente_o_con_seccion_desconocida(tmp_path):
    with pytest.raises(ConfiguracionInvalida):
        cargar_configuracion(tmp_path / "no_existe.ini")
    ruta = tmp_path / "malo.ini"
    ruta.write_text("[gaX]\niteraciones = 3\n", encoding="utf-8")
    with pytest.raises(ConfiguracionInvalida, match="Sección desconocida"):
        cargar_configuracion(ruta)


def test_parsear_fraccion():
    assert parsear_fraccion("6/8") == (6, 8)
    for texto in ("6-8", "0/4", "3/-4", "tres/4"):
        with pytest.raises(ConfiguracionInvalida):
            parsear_fraccion(texto)


def test_validar_pipeline(tmp_path):
    config = cargar_configuracion(None, [f"pipeline.corpus_dir={tmp_path / 'c'}",
                                         f"pipeline.work_dir={tmp_path / 't'}"])
    assert validar_pipeline(config) is config
    for ajustes in (
        [f"pipeline.corpus_dir={tmp_path}", f"pipeline.work_dir={tmp_path}"],
        ["pipeline.tamano_coleccion=0"],
        ["pipeline.unidad=1-16"],
    ):
        with pytest.raises(ConfiguracionInvalida):
            validar_pipeline(cargar_configuracion(None, ajustes))


def test_listar_configuracion(capsys):
    listar_configuracion(cargar_configuracion())
    salida = capsys.readouterr().out
    assert "[entrenamiento]" in salida
    assert "oculto = 50" in salida


def test_fichero_de_ejemplo_del_repositorio():
    ruta = Path(__file__).resolve().parent.parent / "composicion.ini"
    config = cargar_configuracion(ruta)
    assert config["ga2"]["semilla"] == 100
    assert config["reglas"]["prohibir_tritono"] is True
    assert config["compuesto"]["w1"] == pytest.approx(1 / 3)
    assert config["entrenamiento"]["recorte_norma"] == 5.0
