import json

import pandas as pd
import pytest

from codec_abc import leer_abc
from config import cargar_configuracion
from errores import DirectorioBloqueado
from fitness import ConfigCompuesto, ConfigReglas, EvaluadorGA1
from indice_corpus import cargar_indice
from matriz_piano import cargar_matriz_csv, pieza_a_cromosoma, pieza_a_matriz
from pipeline_cli import ARCHIVO_BLOQUEO, COLUMNAS_MANIFIESTO, bloquear_directorio, main


def _ajustes(corpus, trabajo, coleccion=3):
    return [
        f"pipeline.corpus_dir={corpus}",
        f"pipeline.work_dir={trabajo}",
        f"pipeline.tamano_coleccion={coleccion}",
        "ga1.iteraciones=20",
        "ga1.pasos=16",
        "ga2.iteraciones=10",
        "ga2.pasos=16",
        "entrenamiento.epocas=3",
        "entrenamiento.oculto=4",
    ]


def _argumentos(corpus, trabajo, *orden, coleccion=3):
    argumentos = []
    for ajuste in _ajustes(corpus, trabajo, coleccion):
        argumentos += ["--set", ajuste]
    return argumentos + list(orden)


def _escribir_valoraciones(ruta, filas):
    pd.DataFrame(filas, columns=["piece_id", "group", "rater_id", "score"]).to_csv(ruta, index=False)
    return ruta


def _valoraciones_completas(ids):
    filas = []
    for k, identificador in enumerate(ids):
        filas += [
            (identificador, "expert", "e1", 40 + 10 * k),
            (identificador, "expert", "e2", 60 + 10 * k),
            (identificador, "regular", "r1", 70),
        ]
    return filas


@pytest.fixture
def trabajo_con_coleccion(tmp_path, dir_corpus):
    trabajo = tmp_path / "trabajo"
    assert main(_argumentos(dir_corpus, trabajo, "index")) == 0
    assert main(_argumentos(dir_corpus, trabajo, "ga1")) == 0
    return trabajo


def test_indice(tmp_path, dir_corpus):
    trabajo = tmp_path / "trabajo"
    assert main(_argumentos(dir_corpus, trabajo, "index")) == 0
    assert (trabajo / "indice.txt").read_text(encoding="utf-8").startswith("INDICE_CORPUS v1 total_notas=26 piezas=3")
    assert (trabajo / "histograma_notas.csv").exists()
    assert (trabajo / "histograma_notas.png").exists()
    assert not (trabajo / ARCHIVO_BLOQUEO).exists()


def test_coleccion_de_ga1(trabajo_con_coleccion):
    coleccion = trabajo_con_coleccion / "coleccion"
    manifiesto = pd.read_csv(coleccion / "manifiesto.csv", dtype={"id": str})
    assert list(manifiesto.columns) == COLUMNAS_MANIFIESTO
    assert manifiesto["id"].tolist() == ["pieza_000", "pieza_001", "pieza_002"]
    assert manifiesto["seed"].tolist() == [0, 1, 2]
    for identificador in manifiesto["id"]:
        pieza = leer_abc(coleccion / f"{identificador}.abc")
        matriz = cargar_matriz_csv(coleccion / f"{identificador}.csv")
        assert matriz.columnas == 16
        assert pieza_a_matriz(pieza) == matriz
        registro = pd.read_csv(coleccion / "registros" / f"runlog_{identificador}.csv")
        assert len(registro) == 20
    desgloses = pd.read_csv(coleccion / "desgloses.csv")
    assert desgloses["objetivo"].tolist() == pytest.approx(manifiesto["objective"].tolist())


def test_objetivo_del_manifiesto_se_recalcula_desde_el_abc(dir_corpus, trabajo_con_coleccion):
    config = cargar_configuracion(None, _ajustes(dir_corpus, trabajo_con_coleccion))
    indice = cargar_indice(trabajo_con_coleccion / "indice.txt")
    evaluador = EvaluadorGA1(indice, ConfigReglas.desde_parametros(config["reglas"]))
    coleccion = trabajo_con_coleccion / "coleccion"
    manifiesto = pd.read_csv(coleccion / "manifiesto.csv", dtype={"id": str}, float_precision="round_trip")
    for fila in manifiesto.itertuples():
        cromosoma = pieza_a_cromosoma(leer_abc(coleccion / fila.file), canales=config["ga1"]["canales"])
        assert abs(evaluador(cromosoma).objetivo - fila.objective) <= 1e-12, fila.id


def test_ga1_determinista(tmp_path, dir_corpus):
    salidas = []
    for nombre in ("uno", "dos"):
        trabajo = tmp_path / nombre
        assert main(_argumentos(dir_corpus, trabajo, "index")) == 0
        assert main(_argumentos(dir_corpus, trabajo, "ga1")) == 0
        coleccion = trabajo / "coleccion"
        salidas.append({
            ruta.name: ruta.read_bytes()
            for ruta in sorted(coleccion.iterdir())
            if ruta.is_file()
        })
    assert salidas[0] == salidas[1]
    assert "manifiesto.csv" in salidas[0] and "desgloses.csv" in salidas[0]


def test_flujo_completo(tmp_path, dir_corpus, trabajo_con_coleccion):
    trabajo = trabajo_con_coleccion
    ids = ["pieza_000", "pieza_001", "pieza_002"]
    valoraciones = _escribir_valoraciones(tmp_path / "valoraciones.csv", _valoraciones_completas(ids))

    assert main(_argumentos(dir_corpus, trabajo, "ratings-import", str(valoraciones))) == 0
    expertos = pd.read_csv(trabajo / "valoraciones" / "dataset_expert.csv", dtype={"piece_id": str})
    assert list(expertos.columns) == ["piece_id", "roll", "score", "raters"]
    assert expertos["score"].tolist() == [50.0, 60.0, 70.0]
    assert expertos["raters"].tolist() == [2, 2, 2]
    regulares = pd.read_csv(trabajo / "valoraciones" / "dataset_regular.csv")
    assert regulares["raters"].tolist() == [1, 1, 1]

    assert main(_argumentos(dir_corpus, trabajo, "train")) == 0
    modelos = trabajo / "modelos"
    primeros = {grupo: (modelos / f"modelo_{grupo}.bin").read_bytes() for grupo in ("expert", "regular")}
    assert main(_argumentos(dir_corpus, trabajo, "train")) == 0
    for grupo in ("expert", "regular"):
        assert (modelos / f"modelo_{grupo}.bin").read_bytes() == primeros[grupo]
        assert len(pd.read_csv(modelos / f"perdidas_{grupo}.csv")) == 3
    meta = json.loads((modelos / "meta.json").read_text(encoding="utf-8"))
    manifiesto = pd.read_csv(trabajo / "coleccion" / "manifiesto.csv")
    assert meta["oculto"] == 4
    assert meta["norma_gramatica"] == pytest.approx(manifiesto["objective"].max())
    assert (modelos / "perdidas.png").exists()

    assert main(_argumentos(dir_corpus, trabajo, "ga2")) == 0
    ga2 = trabajo / "ga2"
    for nombre in ("mejor.abc", "mejor.csv", "mejor.png", "desglose.csv", "runlog.csv"):
        assert (ga2 / nombre).exists()
    desglose = pd.read_csv(ga2 / "desglose.csv")
    assert 0 <= desglose.loc[0, "x2"] <= 100
    assert 0 <= desglose.loc[0, "x3"] <= 100
    assert len(pd.read_csv(ga2 / "runlog.csv")) == 10
    compuesto = ConfigCompuesto.desde_parametros(
        cargar_configuracion(None, _ajustes(dir_corpus, trabajo))["compuesto"],
        norma_gramatica=meta["norma_gramatica"],
    )
    fila = pd.read_csv(ga2 / "desglose.csv", float_precision="round_trip").iloc[0]
    recalculado = (compuesto.w1 * min(fila["x1"] / compuesto.norma_gramatica, 1.0)
                   + compuesto.w2 * fila["x2"] / 100 + compuesto.w3 * fila["x3"] / 100)
    assert abs(fila["compuesto"] - recalculado) <= 1e-12
    assert fila["x1"] == fila["objetivo"]

    pieza = str(trabajo / "coleccion" / "pieza_000.abc")
    assert main(_argumentos(dir_corpus, trabajo, "score", pieza)) == 0
    assert main(_argumentos(dir_corpus, trabajo, "score", pieza, "--models", str(modelos))) == 0


def test_score_es_determinista(tmp_path, dir_corpus, trabajo_con_coleccion, capsys):
    pieza = str(dir_corpus / "b_dos_voces.abc")
    capsys.readouterr()
    assert main(_argumentos(dir_corpus, trabajo_con_coleccion, "score", pieza)) == 0
    primera = capsys.readouterr().out
    assert main(_argumentos(dir_corpus, trabajo_con_coleccion, "score", pieza)) == 0
    assert capsys.readouterr().out == primera
    assert "Objetivo GA1" in primera


def test_convertir_entre_abc_y_csv(tmp_path, dir_corpus):
    trabajo = tmp_path / "trabajo"
    csv = tmp_path / "escala.csv"
    abc = tmp_path / "escala.abc"
    assert main(_argumentos(dir_corpus, trabajo, "convert", str(dir_corpus / "a_escala.abc"), str(csv))) == 0
    assert main(_argumentos(dir_corpus, trabajo, "convert", str(csv), str(abc))) == 0
    assert pieza_a_matriz(leer_abc(abc)) == cargar_matriz_csv(csv)
    assert main(_argumentos(dir_corpus, trabajo, "convert", str(csv), str(tmp_path / "x.txt"))) == 1


def test_corpus_vacio_sale_con_codigo_2(tmp_path):
    corpus = tmp_path / "vacio"
    corpus.mkdir()
    assert main(_argumentos(corpus, tmp_path / "trabajo", "index")) == 2


def test_ficheros_de_datos_ausentes_o_rotos_salen_con_codigo_2(tmp_path, dir_corpus, capsys):
    trabajo = tmp_path / "trabajo"
    assert main(_argumentos(dir_corpus, trabajo, "ga1")) == 2

    cabecera_rota = tmp_path / "rota.csv"
    cabecera_rota.write_text("tick,nota\n0,1\n", encoding="utf-8")
    assert main(_argumentos(dir_corpus, trabajo, "convert", str(cabecera_rota), str(tmp_path / "x.abc"))) == 2
    assert main(_argumentos(dir_corpus, trabajo, "convert", str(tmp_path / "no_existe.abc"),
                            str(tmp_path / "x.csv"))) == 2
    assert "ERROR" in capsys.readouterr().err


def test_valoraciones_con_filas_irregulares_o_ausentes(tmp_path, dir_corpus, trabajo_con_coleccion):
    irregular = tmp_path / "valoraciones.csv"
    irregular.write_text(
        "piece_id,group,rater_id,score\npieza_000,expert,e1,50\npieza_000,regular,r1,50,9,9\n",
        encoding="utf-8",
    )
    assert main(_argumentos(dir_corpus, trabajo_con_coleccion, "ratings-import", str(irregular))) == 2
    ausente = str(tmp_path / "no_existe.csv")
    assert main(_argumentos(dir_corpus, trabajo_con_coleccion, "ratings-import", ausente)) == 2


def test_errores_de_uso_salen_con_codigo_1(tmp_path, dir_corpus):
    trabajo = tmp_path / "trabajo"
    assert main([]) == 1
    assert main(["componer"]) == 1
    assert main(_argumentos(dir_corpus, trabajo, "index") + ["--desconocida"]) == 1
    assert main(["--set", "ga1.generaciones=5", "index"]) == 1
    assert main(["--set", "pipeline.corpus_dir=x", "--set", "pipeline.work_dir=x", "index"]) == 1
    assert main(["--config", str(tmp_path / "no_existe.ini"), "index"]) == 1


def test_configuracion_desde_fichero(tmp_path, dir_corpus):
    trabajo = tmp_path / "desde_ini"
    ini = tmp_path / "composicion.ini"
    ini.write_text(
        f"[pipeline]\ncorpus_dir = {dir_corpus}\nwork_dir = {trabajo}\n",
        encoding="utf-8",
    )
    assert main(["--config", str(ini), "index"]) == 0
    assert (trabajo / "indice.txt").exists()


def test_directorio_bloqueado(tmp_path, dir_corpus):
    trabajo = tmp_path / "trabajo"
    trabajo.mkdir()
    (trabajo / ARCHIVO_BLOQUEO).write_text("1234")
    assert main(_argumentos(dir_corpus, trabajo, "index")) == 1
    assert not (trabajo / "indice.txt").exists()


def test_el_bloqueo_se_libera_tras_un_error(tmp_path):
    trabajo = tmp_path / "trabajo"
    with pytest.raises(RuntimeError):
        with bloquear_directorio(trabajo):
            with pytest.raises(DirectorioBloqueado):
                with bloquear_directorio(trabajo):
                    pass
            raise RuntimeError("fallo")
    assert not (trabajo / ARCHIVO_BLOQUEO).exists()


@pytest.mark.parametrize("filas", [
    [("pieza_000", "expert", "e1", 101), ("pieza_000", "regular", "r1", 50)],
    [("pieza_000", "expert", "e1", 50.5), ("pieza_000", "regular", "r1", 50)],
    [("pieza_999", "expert", "e1", 50), ("pieza_000", "regular", "r1", 50)],
    [("pieza_000", "expert", "e1", 50), ("pieza_001", "expert", "e2", 50)],
    [("pieza_000", "profesor", "e1", 50), ("pieza_000", "regular", "r1", 50)],
])
def test_valoraciones_invalidas(tmp_path, dir_corpus, trabajo_con_coleccion, filas):
    valoraciones = _escribir_valoraciones(tmp_path / "valoraciones.csv", filas)
    assert main(_argumentos(dir_corpus, trabajo_con_coleccion, "ratings-import", str(valoraciones))) == 2
    assert not (trabajo_con_coleccion / "valoraciones" / "dataset_regular.csv").exists()


def test_valoraciones_con_cabecera_incorrecta(tmp_path, dir_corpus, trabajo_con_coleccion):
    ruta = tmp_path / "valoraciones.csv"
    ruta.write_text("pieza,grupo,nota\npieza_000,expert,50\n", encoding="utf-8")
    assert main(_argumentos(dir_corpus, trabajo_con_coleccion, "ratings-import", str(ruta))) == 2
