"""
================================================================================
CONFIGURACIÓN PARAMÉTRICA - COMPOSICIÓN EVOLUTIVA
================================================================================

Valores por defecto de todas las etapas del sistema y lectura del fichero de
configuración clave-valor (formato INI) con sobreescrituras desde la línea de
órdenes. Los valores por defecto reproducen la tabla de parámetros de los dos
algoritmos genéticos y los hiperparámetros de las redes de oyentes.

Ejemplo de fichero:

    [pipeline]
    corpus_dir = corpus
    work_dir = trabajo
    tamano_coleccion = 20

    [ga1]
    iteraciones = 300
    pasos = 64

Las sobreescrituras usan la forma `seccion.clave=valor`, por ejemplo
`--set ga1.semilla=7`.
"""

import configparser
import copy
from fractions import Fraction
from pathlib import Path

from errores import ConfiguracionInvalida


# ============================================================================
# 1. VALORES POR DEFECTO
# ============================================================================

PARAMETROS_GA = {
    "iteraciones": 3600,
    "poblacion": 15,
    "tasa_cruce": 0.5,
    "tasa_mutacion": 0.1,
    "canales": 2,
    "pasos": 64,
    "semilla": 0,
}

PARAMETROS_REGLAS = {
    "max_salto_melodico": 12,
    "prohibir_tritono": True,
    "compas": "4/4",
    "politica_vertical": "corpus_o_triada",
    "penalizar_transicion_no_vista": True,
    "epsilon": 0.001,
}

PARAMETROS_COMPUESTO = {
    "w1": 1 / 3,
    "w2": 1 / 3,
    "w3": 1 / 3,
    # Solo se usa si los modelos no traen su propia norma registrada
    "norma_gramatica": 2.0,
}

PARAMETROS_ENTRENAMIENTO = {
    "epocas": 5000,
    "tasa_aprendizaje": 1e-3,
    "semilla": 0,
    "optimizador": "adam",
    "tamano_lote": 1,
    "oculto": 50,
    "recorte_norma": 5.0,
}

PARAMETROS_PIPELINE = {
    "corpus_dir": "corpus",
    "work_dir": "trabajo",
    "tamano_coleccion": 20,
    "unidad": "1/16",
}

SECCIONES = {
    "pipeline": PARAMETROS_PIPELINE,
    "ga1": dict(PARAMETROS_GA, modo="GA1"),
    "ga2": dict(PARAMETROS_GA, modo="GA2"),
    "reglas": PARAMETROS_REGLAS,
    "compuesto": PARAMETROS_COMPUESTO,
    "entrenamiento": PARAMETROS_ENTRENAMIENTO,
}

_VERDADEROS = {"1", "true", "si", "sí", "yes", "on"}
_FALSOS = {"0", "false", "no", "off"}


# ============================================================================
# 2. CONVERSIÓN DE VALORES
# ============================================================================

def _convertir(seccion, clave, texto, por_defecto):
    """
    Convierte el texto leído al tipo del valor por defecto.

    Los reales admiten fracciones ("1/3") para poder escribir pesos exactos.
    """
    texto = str(texto).strip()
    try:
        if isinstance(por_defecto, bool):
            if texto.lower() in _VERDADEROS:
                return True
            if texto.lower() in _FALSOS:
                return False
            raise ValueError(texto)
        if isinstance(por_defecto, int):
            return int(texto)
        if isinstance(por_defecto, float):
            return float(Fraction(texto))
    except (ValueError, ZeroDivisionError):
        raise ConfiguracionInvalida(
            f"Valor inválido para {seccion}.{clave}: {texto!r} "
            f"(se esperaba {type(por_defecto).__name__})"
        )
    return texto


def parsear_fraccion(texto, nombre="fracción"):
    """Convierte "3/4" en (3, 4) validando que ambos términos sean positivos."""
    try:
        num, den = (int(p) for p in str(texto).split("/"))
    except ValueError:
        raise ConfiguracionInvalida(f"{nombre} inválida: {texto!r} (formato n/d)")
    if num <= 0 or den <= 0:
        raise ConfiguracionInvalida(f"{nombre} inválida: {texto!r} (términos positivos)")
    return num, den


# ============================================================================
# 3. LECTURA DEL FICHERO
# ============================================================================

def cargar_configuracion(ruta=None, sobreescrituras=()):
    """
    Lee la configuración completa.

    Parámetros:
    -----------
    ruta : str o Path, optional
        Fichero INI. Si es None se usan solo los valores por defecto.
    sobreescrituras : iterable de str
        Asignaciones `seccion.clave=valor` que se aplican después del fichero.

    Retorna:
    --------
    dict
        {seccion: {clave: valor}} con los tipos de los valores por defecto.

    Explicación:
    ------------
    Cualquier sección o clave desconocida es un error: una errata en el
    fichero no debe quedar ignorada en silencio.
    """
    configuracion = copy.deepcopy(SECCIONES)

    if ruta is not None:
        ruta = Path(ruta)
        if not ruta.exists():
            raise ConfiguracionInvalida(f"Fichero de configuración no encontrado: {ruta}")
        lector = configparser.ConfigParser()
        lector.read(ruta, encoding="utf-8")
        for seccion in lector.sections():
            for clave, texto in lector.items(seccion):
                _asignar(configuracion, seccion, clave, texto)

    for asignacion in sobreescrituras:
        if "=" not in asignacion or "." not in asignacion.split("=", 1)[0]:
            raise ConfiguracionInvalida(
                f"Sobreescritura inválida: {asignacion!r} (formato seccion.clave=valor)"
            )
        destino, texto = asignacion.split("=", 1)
        seccion, clave = destino.strip().split(".", 1)
        _asignar(configuracion, seccion, clave, texto)

    return configuracion


def _asignar(configuracion, seccion, clave, texto):
    if seccion not in SECCIONES:
        raise ConfiguracionInvalida(
            f"Sección desconocida: {seccion}. Opciones válidas: {list(SECCIONES.keys())}"
        )
    if clave not in SECCIONES[seccion]:
        raise ConfiguracionInvalida(
            f"Clave desconocida: {seccion}.{clave}. "
            f"Opciones válidas: {list(SECCIONES[seccion].keys())}"
        )
    configuracion[seccion][clave] = _convertir(seccion, clave, texto, SECCIONES[seccion][clave])


def validar_pipeline(configuracion):
    """
    Comprueba la sección [pipeline]: directorios distintos, al menos una pieza
    en la colección y unidad de nota con forma n/d.
    """
    pipeline = configuracion["pipeline"]
    corpus = Path(pipeline["corpus_dir"]).resolve()
    trabajo = Path(pipeline["work_dir"]).resolve()
    if corpus == trabajo:
        raise ConfiguracionInvalida(f"corpus_dir y work_dir deben ser distintos: {corpus}")
    if pipeline["tamano_coleccion"] < 1:
        raise ConfiguracionInvalida(
            f"tamano_coleccion debe ser >= 1: {pipeline['tamano_coleccion']}"
        )
    parsear_fraccion(pipeline["unidad"], "unidad")
    return configuracion


def listar_configuracion(configuracion):
    """
    Muestra la configuración efectiva.

    Returns:
    --------
    None (imprime información en consola)
    """
    print("\n" + "=" * 80)
    print("CONFIGURACIÓN EFECTIVA")
    print("=" * 80)
    for seccion, valores in configuracion.items():
        print(f"\n[{seccion}]")
        for clave, valor in valores.items():
            print(f"  {clave} = {valor}")
    print("=" * 80 + "\n")
