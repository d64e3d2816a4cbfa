"""
ERRORES: JERARQUÍA DE EXCEPCIONES DEL SISTEMA DE COMPOSICIÓN
=============================================================

Todas las excepciones propias derivan de ErrorComposicion y llevan un
código de salida que usa la línea de órdenes:

- 1: error de uso o de configuración
- 2: error en los datos (ABC, corpus, valoraciones, checkpoints)
- 3: divergencia numérica durante el entrenamiento

Las de datos heredan además de ValueError, así que un `except ValueError`
sigue capturándolas.
"""


class ErrorComposicion(Exception):
    """Base de todos los errores del sistema."""

    codigo_salida = 2


# ============================================================================
# 1. CONFIGURACIÓN
# ============================================================================

class ConfiguracionInvalida(ErrorComposicion, ValueError):
    """Parámetro de configuración fuera de su dominio."""

    codigo_salida = 1


class DirectorioBloqueado(ErrorComposicion):
    """Otra orden está usando el mismo directorio de trabajo."""

    codigo_salida = 1


# ============================================================================
# 2. NOTACIÓN ABC
# ============================================================================

class TokenNoSoportado(ErrorComposicion, ValueError):
    """Token fuera del subconjunto ABC admitido."""

    def __init__(self, posicion, token, motivo=None):
        self.posicion = posicion
        self.token = token
        mensaje = f"Token no soportado {token!r} en la posición {posicion}"
        if motivo:
            mensaje += f": {motivo}"
        super().__init__(mensaje)


class NotaFueraDeRango(ErrorComposicion, ValueError):
    """Nota por debajo de A0 o por encima de C8."""

    def __init__(self, posicion, midi):
        self.posicion = posicion
        self.midi = midi
        super().__init__(
            f"Nota fuera del teclado (MIDI {midi}) en la posición {posicion}; "
            f"el rango válido es A0 (21) - C8 (108)"
        )


class CabeceraMalformada(ErrorComposicion, ValueError):
    """Falta X o K, o un campo de cabecera no se puede interpretar."""


# ============================================================================
# 3. REPRESENTACIÓN Y CORPUS
# ============================================================================

class DemasiadasVoces(ErrorComposicion, ValueError):
    """Una columna de la matriz supera la capacidad de canales."""

    def __init__(self, columna, sonando, canales):
        self.columna = columna
        super().__init__(
            f"La columna {columna} tiene {sonando} notas sonando y solo hay {canales} canales"
        )


class CorpusVacio(ErrorComposicion, ValueError):
    """No hay ninguna pieza con la que construir el índice."""


class FormasIncompatibles(ErrorComposicion, ValueError):
    """Dos cromosomas con distinta forma canales × pasos."""


class IndiceMalformado(ErrorComposicion, ValueError):
    """Fichero de índice con una línea que no se puede interpretar."""


class MatrizMalformada(ErrorComposicion, ValueError):
    """CSV de matriz de piano con cabecera, ticks o celdas inválidas."""


# ============================================================================
# 4. MODELO DE OYENTES
# ============================================================================

class SecuenciaVacia(ErrorComposicion, ValueError):
    """Matriz de piano sin columnas."""


class DivergenciaDetectada(ErrorComposicion, ArithmeticError):
    """
    La pérdida dejó de ser finita durante el entrenamiento.

    Guarda la red en su último estado finito y la curva hasta ese punto.
    """

    codigo_salida = 3

    def __init__(self, epoca, red=None, curva=None):
        self.epoca = epoca
        self.red = red
        self.curva = curva if curva is not None else []
        super().__init__(f"Pérdida no finita en la época {epoca}; se conserva el último estado finito")


class ChecksumNoCoincide(ErrorComposicion, ValueError):
    """Checkpoint truncado o corrupto."""


class VersionNoCoincide(ErrorComposicion, ValueError):
    """Fichero (checkpoint o índice) de otra versión de formato o de otras dimensiones."""


# ============================================================================
# 5. VALORACIONES
# ============================================================================

class ValoracionInvalida(ErrorComposicion, ValueError):
    """Fichero de valoraciones que no respeta el formato."""


class PiezaDesconocida(ValoracionInvalida):
    """piece_id que no figura en el manifiesto de la colección."""


class PuntuacionFueraDeRango(ValoracionInvalida):
    """Puntuación fuera de [0, 100]."""


class GrupoVacio(ValoracionInvalida):
    """Un grupo de oyentes sin ninguna valoración."""
