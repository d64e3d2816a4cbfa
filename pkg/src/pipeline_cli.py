"""
================================================================================
PIPELINE_CLI: LÍNEA DE ÓRDENES DEL SISTEMA DE COMPOSICIÓN
================================================================================

Orquesta el flujo completo en dos etapas:

    corpus ABC --index--> índice --ga1--> colección --(oyentes)--> valoraciones
        --ratings-import--> conjuntos --train--> modelos --ga2--> pieza final

Órdenes:
    index            Construye el índice del corpus y el histograma de notas
    ga1              Genera la colección de piezas para valorar
    ratings-import   Valida y promedia las valoraciones de los oyentes
    train            Entrena los modelos de oyentes experto y regular
    ga2              Compone con la función compuesta (y compara tiempos)
    score            Evalúa una pieza ABC cualquiera
    convert          Convierte entre ABC y CSV de matriz de piano

Opciones globales:
    --config FICHERO.ini      Fichero de configuración
    --set seccion.clave=valor Sobreescritura (repetible)
    --verbose                 Registro en nivel DEBUG
    --progreso                Barras de progreso

Códigos de salida: 0 éxito, 1 error de uso o configuración, 2 error en los
datos, 3 divergencia numérica.

Uso:
    python src/pipeline_cli.py --config composicion.ini index
    python src/pipeline_cli.py ga1 --set ga1.iteraciones=300
================================================================================
"""

import argparse
import json
import logging
import os
import sys
from contextlib import contextmanager
from dataclasses import replace
from fractions import Fraction
from pathlib import Path

import matplotlib.pyplot as plt
import pandas as pd

from codec_abc import NUMERO_TECLAS, escribir_abc, leer_abc
from config import cargar_configuracion, listar_configuracion, parsear_fraccion, validar_pipeline
from errores import (
    CabeceraMalformada,
    ConfiguracionInvalida,
    DirectorioBloqueado,
    DivergenciaDetectada,
    ErrorComposicion,
    GrupoVacio,
    PiezaDesconocida,
    PuntuacionFueraDeRango,
)
from evolucion import ConfigGA, comparar_tiempos, ejecutar, visualizar_tiempos
from fitness import (
    ConfigCompuesto,
    ConfigReglas,
    EvaluadorGA1,
    EvaluadorGA2,
    desgloses_a_dataframe,
)
from indice_corpus import (
    cargar_indice,
    construir_indice,
    exportar_histograma,
    guardar_indice,
    imprimir_resumen_indice,
    leer_corpus,
)
from matriz_piano import (
    canonizar,
    cargar_matriz_csv,
    cromosoma_a_matriz,
    cromosoma_a_pieza,
    guardar_matriz_csv,
    imprimir_validacion,
    matriz_a_cromosoma,
    pieza_a_cromosoma,
    pieza_a_matriz,
    validar_cromosoma,
    visualizar_matriz,
)
from modelo_oyente import (
    ConfigEntrenamiento,
    ConjuntoValoraciones,
    RedOyente,
    cargar_modelo,
    curva_a_dataframe,
    entrenar,
    guardar_modelo,
    visualizar_curva,
)

logger = logging.getLogger(__name__)

GRUPOS = ("expert", "regular")
COLUMNAS_VALORACIONES = ["piece_id", "group", "rater_id", "score"]
COLUMNAS_MANIFIESTO = ["id", "file", "objective", "seed"]
ARCHIVO_BLOQUEO = ".bloqueo"


# ============================================================================
# 1. RUTAS Y BLOQUEO
# ============================================================================

def rutas_trabajo(config):
    """Rutas por defecto de todos los artefactos dentro de work_dir."""
    trabajo = Path(config["pipeline"]["work_dir"])
    return {
        "trabajo": trabajo,
        "indice": trabajo / "indice.txt",
        "histograma": trabajo / "histograma_notas.csv",
        "coleccion": trabajo / "coleccion",
        "manifiesto": trabajo / "coleccion" / "manifiesto.csv",
        "valoraciones": trabajo / "valoraciones",
        "modelos": trabajo / "modelos",
        "ga2": trabajo / "ga2",
    }


@contextmanager
def bloquear_directorio(directorio):
    """
    Impide que dos órdenes usen a la vez el mismo directorio de trabajo.

    Errores:
    --------
    DirectorioBloqueado si el fichero de bloqueo ya existe.
    """
    directorio = Path(directorio)
    directorio.mkdir(parents=True, exist_ok=True)
    ruta = directorio / ARCHIVO_BLOQUEO
    try:
        descriptor = os.open(ruta, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise DirectorioBloqueado(
            f"El directorio {directorio} está en uso (existe {ruta}); "
            f"si ninguna orden está en marcha, borre el fichero"
        )
    try:
        os.write(descriptor, str(os.getpid()).encode())
        os.close(descriptor)
        yield ruta
    finally:
        ruta.unlink(missing_ok=True)


def _compas(config):
    return parsear_fraccion(config["reglas"]["compas"], "compás")


def _unidad(config):
    return Fraction(*parsear_fraccion(config["pipeline"]["unidad"], "unidad"))


def imprimir_desglose(desglose, titulo="EVALUACIÓN"):
    """
    Muestra un desglose de fitness.

    Returns:
    --------
    None (imprime información en consola)
    """
    print("\n" + "=" * 80)
    print(titulo)
    print("=" * 80)
    print(f"Objetivo GA1:  {desglose.objetivo:.8f}")
    print(f"Score:         {desglose.score:.8f}")
    print(f"Coste:         {desglose.cost}")
    for regla, cuenta in desglose.violaciones.items():
        print(f"  {regla:<12} {cuenta}")
    print(f"N2, N3, N4:    {desglose.n2}, {desglose.n3}, {desglose.n4}")
    print(f"S2, S3, S4:    {desglose.s2}, {desglose.s3}, {desglose.s4}")
    print(f"M, L:          {desglose.m}, {desglose.l}")
    if desglose.compuesto is not None:
        print(f"X1, X2, X3:    {desglose.x1:.6f}, {desglose.x2:.4f}, {desglose.x3:.4f}")
        print(f"Compuesto:     {desglose.compuesto:.8f}")
    print("=" * 80 + "\n")


# ============================================================================
# 2. ÍNDICE
# ============================================================================

def cmd_index(config, salida=None, estricto=False):
    """
    Construye el índice del corpus.

    Escribe el fichero de índice, el histograma de notas (CSV y figura) y
    muestra el número de piezas y de notas. Los ficheros ABC que no se pueden
    leer se descartan con aviso, salvo con estricto=True.
    """
    rutas = rutas_trabajo(config)
    salida = Path(salida) if salida else rutas["indice"]

    piezas, descartados = leer_corpus(config["pipeline"]["corpus_dir"], estricto=estricto)
    for nombre, motivo in descartados:
        print(f"ADVERTENCIA: se descarta {nombre}: {motivo}")

    indice = construir_indice(piezas)
    guardar_indice(indice, salida)
    exportar_histograma(
        indice,
        salida.parent / rutas["histograma"].name,
        salida.parent / rutas["histograma"].with_suffix(".png").name,
    )
    imprimir_resumen_indice(indice)
    print(f"Índice guardado en {salida}")
    return indice


# ============================================================================
# 3. PRIMERA ETAPA: COLECCIÓN
# ============================================================================

def cmd_ga1(config, ruta_indice=None, salida=None, mostrar_progreso=False):
    """
    Genera la colección de piezas que valorarán los oyentes.

    Ejecuta GA1 tamano_coleccion veces con semillas semilla + i y exporta, por
    cada pieza, el ABC, la matriz en CSV y su desglose, además del registro
    de la ejecución y el manifiesto (id, file, objective, seed).
    """
    rutas = rutas_trabajo(config)
    indice = cargar_indice(ruta_indice or rutas["indice"])
    salida = Path(salida) if salida else rutas["coleccion"]
    (salida / "registros").mkdir(parents=True, exist_ok=True)

    reglas = ConfigReglas.desde_parametros(config["reglas"])
    config_ga = ConfigGA.desde_parametros(config["ga1"])
    evaluador = EvaluadorGA1(indice, reglas)

    print("\n" + "=" * 80)
    print(f"GA1: GENERACIÓN DE {config['pipeline']['tamano_coleccion']} PIEZAS")
    print("=" * 80)

    manifiesto, desgloses = [], []
    for i in range(config["pipeline"]["tamano_coleccion"]):
        identificador = f"pieza_{i:03d}"
        config_pieza = replace(config_ga, semilla=config_ga.semilla + i)
        mejor, registro = ejecutar(config_pieza, evaluador, indice, mostrar_progreso)

        canonico = canonizar(mejor)
        desglose = evaluador(canonico)
        pieza = cromosoma_a_pieza(
            canonico, compas=_compas(config), unidad=_unidad(config),
            titulo=f"GA1 {identificador}", indice=i + 1,
        )
        escribir_abc(pieza, salida / f"{identificador}.abc")
        guardar_matriz_csv(cromosoma_a_matriz(canonico), salida / f"{identificador}.csv")
        registro.guardar_csv(salida / "registros" / f"runlog_{identificador}.csv")

        manifiesto.append({
            "id": identificador,
            "file": f"{identificador}.abc",
            "objective": desglose.objetivo,
            "seed": config_pieza.semilla,
        })
        desgloses.append(desglose)
        print(f"{identificador}: objetivo {desglose.objetivo:.6f} "
              f"(score {desglose.score:.6f}, coste {desglose.cost}, semilla {config_pieza.semilla})")

    pd.DataFrame(manifiesto, columns=COLUMNAS_MANIFIESTO).to_csv(salida / "manifiesto.csv", index=False)
    desgloses_a_dataframe(desgloses, ids=[m["id"] for m in manifiesto]).to_csv(
        salida / "desgloses.csv", index=False
    )
    print("=" * 80)
    print(f"Colección guardada en {salida}\n")
    return manifiesto


def cargar_manifiesto(ruta):
    """Lee el manifiesto de la colección."""
    df = pd.read_csv(ruta, dtype={"id": str, "file": str}, float_precision="round_trip")
    if list(df.columns) != COLUMNAS_MANIFIESTO:
        raise CabeceraMalformada(f"Manifiesto inválido {ruta}: se esperaban {COLUMNAS_MANIFIESTO}")
    return df


# ============================================================================
# 4. VALORACIONES
# ============================================================================

def cmd_ratings_import(config, ruta_csv, ruta_manifiesto=None, salida=None):
    """
    Valida las valoraciones y escribe un conjunto por grupo de oyentes.

    Cada fila del CSV (piece_id, group, rater_id, score) debe referirse a una
    pieza del manifiesto, a un grupo 'expert' o 'regular' y tener una
    puntuación entera entre 0 y 100. Las puntuaciones se promedian por pieza
    y grupo.

    Retorna:
    --------
    dict {grupo: pd.DataFrame}
        Columnas piece_id, roll, score, raters
    """
    rutas = rutas_trabajo(config)
    ruta_manifiesto = Path(ruta_manifiesto) if ruta_manifiesto else rutas["manifiesto"]
    salida = Path(salida) if salida else rutas["valoraciones"]
    manifiesto = cargar_manifiesto(ruta_manifiesto)
    conocidas = dict(zip(manifiesto["id"], manifiesto["file"]))

    valoraciones = pd.read_csv(ruta_csv, dtype={"piece_id": str, "group": str, "rater_id": str})
    if list(valoraciones.columns) != COLUMNAS_VALORACIONES:
        raise CabeceraMalformada(
            f"El CSV de valoraciones debe tener la cabecera {','.join(COLUMNAS_VALORACIONES)}"
        )

    for posicion, fila in valoraciones.iterrows():
        linea = posicion + 2
        if fila["piece_id"] not in conocidas:
            raise PiezaDesconocida(f"Fila {linea}: la pieza {fila['piece_id']!r} no está en el manifiesto")
        if fila["group"] not in GRUPOS:
            raise CabeceraMalformada(f"Fila {linea}: grupo {fila['group']!r} (opciones: {list(GRUPOS)})")
        puntuacion = pd.to_numeric(fila["score"], errors="coerce")
        if pd.isna(puntuacion) or puntuacion != int(puntuacion) or not 0 <= puntuacion <= 100:
            raise PuntuacionFueraDeRango(
                f"Fila {linea}: puntuación {fila['score']!r} (debe ser un entero en [0, 100])"
            )
    valoraciones["score"] = pd.to_numeric(valoraciones["score"]).astype(int)

    salida.mkdir(parents=True, exist_ok=True)
    conjuntos = {}
    for grupo in GRUPOS:
        del_grupo = valoraciones[valoraciones["group"] == grupo]
        if del_grupo.empty:
            raise GrupoVacio(f"El grupo {grupo!r} no tiene ninguna valoración")
        resumen = (
            del_grupo.groupby("piece_id", sort=True)["score"]
            .agg(score="mean", raters="count")
            .reset_index()
        )
        resumen.insert(1, "roll", [
            os.path.relpath(
                (ruta_manifiesto.parent / conocidas[p]).with_suffix(".csv").resolve(),
                salida.resolve(),
            )
            for p in resumen["piece_id"]
        ])
        resumen.to_csv(salida / f"dataset_{grupo}.csv", index=False)
        conjuntos[grupo] = resumen

    print("\n" + "=" * 80)
    print("VALORACIONES IMPORTADAS")
    print("=" * 80)
    tabla = pd.concat(
        {grupo: df.set_index("piece_id")[["score", "raters"]] for grupo, df in conjuntos.items()},
        axis=1,
    )
    print(tabla.to_string())
    print("=" * 80 + "\n")
    return conjuntos


def cargar_conjunto(ruta, grupo):
    """Lee un conjunto escrito por cmd_ratings_import como ConjuntoValoraciones."""
    ruta = Path(ruta)
    df = pd.read_csv(ruta, dtype={"piece_id": str, "roll": str}, float_precision="round_trip")
    if not {"piece_id", "roll", "score", "raters"} <= set(df.columns):
        raise CabeceraMalformada(f"Conjunto de valoraciones inválido {ruta}: faltan columnas")
    elementos = [
        (cargar_matriz_csv(ruta.parent / rollo), float(puntuacion))
        for rollo, puntuacion in zip(df["roll"], df["score"])
    ]
    return ConjuntoValoraciones(
        elementos=tuple(elementos),
        grupo=grupo,
        valoradores=tuple(int(v) for v in df["raters"]),
        ids=tuple(df["piece_id"]),
    )


# ============================================================================
# 5. ENTRENAMIENTO DE LOS MODELOS DE OYENTES
# ============================================================================

def cmd_train(config, grupos=GRUPOS, dir_conjuntos=None, ruta_manifiesto=None, salida=None,
              mostrar_progreso=False):
    """
    Entrena un modelo por grupo de oyentes.

    Guarda modelo_<grupo>.bin, perdidas_<grupo>.csv y una figura con las
    curvas. En meta.json registra la norma gramatical (el mejor objetivo de
    GA1 de la colección valorada) y el tamaño oculto.

    Errores:
    --------
    DivergenciaDetectada: el último estado finito se guarda en
    modelo_<grupo>_divergente.bin antes de propagar el error.
    """
    rutas = rutas_trabajo(config)
    dir_conjuntos = Path(dir_conjuntos) if dir_conjuntos else rutas["valoraciones"]
    ruta_manifiesto = Path(ruta_manifiesto) if ruta_manifiesto else rutas["manifiesto"]
    salida = Path(salida) if salida else rutas["modelos"]
    salida.mkdir(parents=True, exist_ok=True)

    parametros = config["entrenamiento"]
    config_entrenamiento = ConfigEntrenamiento.desde_parametros(parametros)
    norma = float(cargar_manifiesto(ruta_manifiesto)["objective"].max())

    curvas = {}
    for grupo in grupos:
        conjunto = cargar_conjunto(dir_conjuntos / f"dataset_{grupo}.csv", grupo)
        red = RedOyente.inicializar(parametros["oculto"], NUMERO_TECLAS, parametros["semilla"])
        print(f"Entrenando modelo {grupo}: {len(conjunto)} piezas, "
              f"{config_entrenamiento.epocas} épocas")
        try:
            entrenada, curva = entrenar(red, conjunto, config_entrenamiento, mostrar_progreso)
        except DivergenciaDetectada as error:
            guardar_modelo(error.red, salida / f"modelo_{grupo}_divergente.bin")
            curva_a_dataframe(error.curva).to_csv(salida / f"perdidas_{grupo}.csv", index=False)
            raise
        guardar_modelo(entrenada, salida / f"modelo_{grupo}.bin")
        curva_a_dataframe(curva).to_csv(salida / f"perdidas_{grupo}.csv", index=False)
        curvas[grupo] = curva
        print(f"  RMSE inicial {curva[0]:.4f} -> final {curva[-1]:.4f}")

    ruta_meta = salida / "meta.json"
    meta = json.loads(ruta_meta.read_text(encoding="utf-8")) if ruta_meta.exists() else {}
    meta.update({"norma_gramatica": norma, "oculto": parametros["oculto"]})
    ruta_meta.write_text(json.dumps(meta, indent=2, sort_keys=True), encoding="utf-8")
    visualizar_curva(curvas, salida / "perdidas.png")
    return curvas


def cargar_modelos(dir_modelos):
    """Carga los dos modelos y la norma gramatical registrada."""
    dir_modelos = Path(dir_modelos)
    meta = json.loads((dir_modelos / "meta.json").read_text(encoding="utf-8"))
    oculto = meta.get("oculto")
    redes = {
        grupo: cargar_modelo(dir_modelos / f"modelo_{grupo}.bin", oculto=oculto, dim_entrada=NUMERO_TECLAS)
        for grupo in GRUPOS
    }
    return redes, meta.get("norma_gramatica")


def _evaluador_ga2(config, indice, reglas, dir_modelos):
    redes, norma = cargar_modelos(dir_modelos)
    compuesto = ConfigCompuesto.desde_parametros(config["compuesto"], norma_gramatica=norma)
    return EvaluadorGA2(indice, reglas, redes["expert"], redes["regular"], compuesto)


# ============================================================================
# 6. SEGUNDA ETAPA
# ============================================================================

def cmd_ga2(config, ruta_indice=None, dir_modelos=None, salida=None, tiempos=False,
            mostrar_progreso=False):
    """
    Compone con la función compuesta de GA2.

    Exporta la mejor pieza (ABC, CSV y mapa de calor), su desglose completo
    con X1, X2, X3 y el registro de la ejecución. Con tiempos=True ejecuta
    además GA1 y GA2 para longitudes 32, 64, 128 y 256 y guarda la
    comparación en tiempos.csv y tiempos.png.
    """
    rutas = rutas_trabajo(config)
    indice = cargar_indice(ruta_indice or rutas["indice"])
    dir_modelos = Path(dir_modelos) if dir_modelos else rutas["modelos"]
    salida = Path(salida) if salida else rutas["ga2"]
    salida.mkdir(parents=True, exist_ok=True)

    reglas = ConfigReglas.desde_parametros(config["reglas"])
    evaluador = _evaluador_ga2(config, indice, reglas, dir_modelos)
    config_ga = ConfigGA.desde_parametros(config["ga2"])

    mejor, registro = ejecutar(config_ga, evaluador, indice, mostrar_progreso)
    canonico = canonizar(mejor)
    desglose = evaluador(canonico)
    pieza = cromosoma_a_pieza(canonico, compas=_compas(config), unidad=_unidad(config), titulo="GA2")
    escribir_abc(pieza, salida / "mejor.abc")
    matriz = cromosoma_a_matriz(canonico)
    guardar_matriz_csv(matriz, salida / "mejor.csv")
    plt.close(visualizar_matriz(matriz, salida / "mejor.png", titulo="Mejor pieza de GA2"))
    desgloses_a_dataframe([desglose], ids=["mejor"]).to_csv(salida / "desglose.csv", index=False)
    registro.guardar_csv(salida / "runlog.csv")
    imprimir_desglose(desglose, "GA2: MEJOR PIEZA")

    if tiempos:
        evaluadores = {
            "GA1": EvaluadorGA1(indice, reglas),
            "GA2": _evaluador_ga2(config, indice, reglas, dir_modelos),
        }
        tabla = comparar_tiempos(config_ga, evaluadores, indice)
        tabla.to_csv(salida / "tiempos.csv", index=False)
        visualizar_tiempos(tabla, salida / "tiempos.png")
        print(tabla.to_string(index=False))
    return desglose


# ============================================================================
# 7. EVALUACIÓN Y CONVERSIÓN
# ============================================================================

def cmd_score(config, ruta_pieza, ruta_indice=None, dir_modelos=None):
    """Evalúa una pieza ABC; con modelos añade la función compuesta."""
    rutas = rutas_trabajo(config)
    indice = cargar_indice(ruta_indice or rutas["indice"])
    reglas = ConfigReglas.desde_parametros(config["reglas"])

    cromosoma = pieza_a_cromosoma(leer_abc(ruta_pieza))
    validacion = validar_cromosoma(cromosoma.genes)
    if validacion["errores"] or validacion["advertencias"]:
        imprimir_validacion(validacion)

    if dir_modelos:
        evaluador = _evaluador_ga2(config, indice, reglas, dir_modelos)
    else:
        evaluador = EvaluadorGA1(indice, reglas)
    desglose = evaluador(cromosoma)
    imprimir_desglose(desglose, f"EVALUACIÓN DE {Path(ruta_pieza).name}")
    return desglose


def cmd_convert(config, entrada, salida):
    """
    Convierte ABC -> CSV de matriz de piano o CSV -> ABC según las extensiones.

    Al pasar de matriz a ABC, dos notas iguales seguidas se escriben como una
    sola nota larga.
    """
    entrada, salida = Path(entrada), Path(salida)
    sufijos = (entrada.suffix.lower(), salida.suffix.lower())
    if sufijos == (".abc", ".csv"):
        guardar_matriz_csv(pieza_a_matriz(leer_abc(entrada)), salida)
    elif sufijos == (".csv", ".abc"):
        matriz = cargar_matriz_csv(entrada)
        canales = max(1, int(matriz.celdas.sum(axis=0).max())) if matriz.columnas else 1
        cromosoma = matriz_a_cromosoma(matriz, canales)
        escribir_abc(
            cromosoma_a_pieza(cromosoma, compas=_compas(config), unidad=_unidad(config),
                              titulo=entrada.stem),
            salida,
        )
    else:
        raise ConfiguracionInvalida(
            f"Conversión no soportada {sufijos[0]} -> {sufijos[1]} (use .abc <-> .csv)"
        )
    print(f"{entrada} -> {salida}")
    return salida


# ============================================================================
# 8. ANALIZADOR DE ARGUMENTOS
# ============================================================================

class _Analizador(argparse.ArgumentParser):
    """Los errores de uso salen con código 1 como el resto de errores de configuración."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfiguracionInvalida(message)


def construir_analizador():
    analizador = _Analizador(
        prog="pipeline_cli",
        description="Composición evolutiva en dos etapas con modelos de oyentes.",
    )
    analizador.add_argument("--config", default=None, help="Fichero de configuración INI")
    analizador.add_argument("--set", action="append", default=[], metavar="SECCION.CLAVE=VALOR",
                            help="Sobreescribe un parámetro (repetible)")
    analizador.add_argument("--verbose", action="store_true", help="Registro en nivel DEBUG")
    analizador.add_argument("--progreso", action="store_true", help="Muestra barras de progreso")
    analizador.add_argument("--mostrar-config", action="store_true", help="Imprime la configuración efectiva")
    ordenes = analizador.add_subparsers(dest="orden", required=True, parser_class=_Analizador)

    p = ordenes.add_parser("index", help="Construye el índice del corpus")
    p.add_argument("--out", default=None, help="Fichero de índice de salida")
    p.add_argument("--strict", action="store_true", help="Falla ante cualquier ABC ilegible")

    p = ordenes.add_parser("ga1", help="Genera la colección para valorar")
    p.add_argument("--index", default=None)
    p.add_argument("--out", default=None)

    p = ordenes.add_parser("ratings-import", help="Importa valoraciones de oyentes")
    p.add_argument("csv", help="CSV piece_id,group,rater_id,score")
    p.add_argument("--manifest", default=None)
    p.add_argument("--out", default=None)

    p = ordenes.add_parser("train", help="Entrena los modelos de oyentes")
    p.add_argument("--group", choices=GRUPOS + ("both",), default="both")
    p.add_argument("--datasets", default=None)
    p.add_argument("--manifest", default=None)
    p.add_argument("--out", default=None)

    p = ordenes.add_parser("ga2", help="Compone con los modelos de oyentes")
    p.add_argument("--index", default=None)
    p.add_argument("--models", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--tiempos", action="store_true", help="Compara tiempos de GA1 y GA2 por longitud")

    p = ordenes.add_parser("score", help="Evalúa una pieza ABC")
    p.add_argument("pieza")
    p.add_argument("--index", default=None)
    p.add_argument("--models", default=None)

    p = ordenes.add_parser("convert", help="Convierte entre .abc y .csv")
    p.add_argument("entrada")
    p.add_argument("salida")

    return analizador


def _ejecutar_orden(config, args):
    trabajo = rutas_trabajo(config)["trabajo"]
    if args.orden == "score":
        return cmd_score(config, args.pieza, args.index, args.models)
    if args.orden == "convert":
        return cmd_convert(config, args.entrada, args.salida)

    with bloquear_directorio(trabajo):
        if args.orden == "index":
            return cmd_index(config, args.out, args.strict)
        if args.orden == "ga1":
            return cmd_ga1(config, args.index, args.out, args.progreso)
        if args.orden == "ratings-import":
            return cmd_ratings_import(config, args.csv, args.manifest, args.out)
        if args.orden == "train":
            grupos = GRUPOS if args.group == "both" else (args.group,)
            return cmd_train(config, grupos, args.datasets, args.manifest, args.out, args.progreso)
        if args.orden == "ga2":
            return cmd_ga2(config, args.index, args.models, args.out, args.tiempos, args.progreso)
    raise ConfiguracionInvalida(f"Orden desconocida: {args.orden}")


def main(argv=None):
    """
    Punto de entrada.

    Retorna:
    --------
    int
        Código de salida (0 éxito, 1 uso/configuración, 2 datos, 3 divergencia)
    """
    try:
        args = construir_analizador().parse_args(argv)
        logging.basicConfig(
            level=logging.DEBUG if args.verbose else logging.INFO,
            format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        )
        config = validar_pipeline(cargar_configuracion(args.config, args.set))
        if args.mostrar_config:
            listar_configuracion(config)
        _ejecutar_orden(config, args)
    except ErrorComposicion as error:
        logger.error("%s", error)
        print(f"ERROR: {error}", file=sys.stderr)
        return error.codigo_salida
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as error:
        logger.error("%s", error)
        print(f"ERROR: no se pudo leer un fichero de datos: {error}", file=sys.stderr)
        return ErrorComposicion.codigo_salida
    return 0


if __name__ == "__main__":
    sys.exit(main())
