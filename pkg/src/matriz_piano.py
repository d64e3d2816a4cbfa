"""
MATRIZ_PIANO: MATRIZ DE PIANO Y CROMOSOMA
=========================================

Este módulo contiene la representación canónica de una pieza (la matriz de
piano binaria de 88 filas) y el genotipo del algoritmo genético (una rejilla
canales × pasos de alturas), junto con las conversiones entre ellas y con
las piezas leídas de ABC.

FUNCIONALIDADES:
- MatrizPiano: 88 filas (una por tecla, A0 = fila 0) × T columnas de ticks
- Cromosoma: canales × pasos, cada gen 0 (silencio) o tecla + 1 (1-88)
- Conversiones Pieza -> matriz, cromosoma <-> matriz, cromosoma -> Pieza
- Exportación e importación CSV de la matriz (cabecera tick,k0..k87)
- Mapa de calor de la matriz

CÓMO FUNCIONA:
1. Una nota sostenida en un canal es una corrida de genes iguales no nulos;
   dos notas iguales seguidas son indistinguibles de una larga (la matriz
   binaria tiene la misma ambigüedad)
2. Al pasar de matriz a cromosoma, las alturas de cada columna se reparten
   en orden descendente: el canal 0 lleva siempre la voz más aguda (melodía)
3. Cromosoma -> matriz -> cromosoma es la identidad cuando el cromosoma ya
   respeta ese orden de canales
"""

from dataclasses import dataclass
from fractions import Fraction

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
import seaborn as sns

from codec_abc import NUMERO_TECLAS, EventoNota, Pieza, nombre_tecla
from errores import DemasiadasVoces, MatrizMalformada


COLUMNAS_CSV = ["tick"] + [f"k{i}" for i in range(NUMERO_TECLAS)]


# ============================================================================
# 1. TIPOS DE DATOS
# ============================================================================

@dataclass(frozen=True, eq=False)
class MatrizPiano:
    """
    Matriz binaria 88 × T. La fila r vale 1 en la columna c si la tecla r
    suena durante el tick c.
    """

    celdas: np.ndarray

    def __post_init__(self):
        celdas = np.array(self.celdas, dtype=np.uint8)
        if celdas.ndim != 2 or celdas.shape[0] != NUMERO_TECLAS:
            raise ValueError(f"La matriz debe tener {NUMERO_TECLAS} filas, tiene forma {celdas.shape}")
        if np.any(celdas > 1):
            raise ValueError("La matriz de piano solo puede contener ceros y unos")
        celdas.flags.writeable = False
        object.__setattr__(self, "celdas", celdas)

    @property
    def columnas(self):
        return self.celdas.shape[1]

    def __eq__(self, otra):
        if not isinstance(otra, MatrizPiano):
            return NotImplemented
        return np.array_equal(self.celdas, otra.celdas)

    __hash__ = None

    @classmethod
    def vacia(cls, columnas):
        return cls(np.zeros((NUMERO_TECLAS, columnas), dtype=np.uint8))


@dataclass(frozen=True, eq=False)
class Cromosoma:
    """
    Genotipo del algoritmo genético: rejilla canales × pasos.

    Cada gen es 0 (silencio) o un valor 1-88 (índice de tecla + 1). En un
    mismo paso no puede repetirse una altura no nula entre canales.
    """

    genes: np.ndarray

    def __post_init__(self):
        genes = np.array(self.genes, dtype=np.int16)
        if genes.ndim != 2 or genes.shape[0] < 1:
            raise ValueError(f"Los genes deben ser una rejilla canales × pasos, forma {genes.shape}")
        if genes.size and (genes.min() < 0 or genes.max() > NUMERO_TECLAS):
            raise ValueError(f"Genes fuera de 0..{NUMERO_TECLAS}")
        if genes.shape[0] > 1:
            ordenados = np.sort(genes, axis=0)
            repetidos = (ordenados[1:] == ordenados[:-1]) & (ordenados[1:] > 0)
            if np.any(repetidos):
                paso = int(np.nonzero(repetidos.any(axis=0))[0][0])
                raise ValueError(f"Altura repetida entre canales en el paso {paso}")
        genes.flags.writeable = False
        object.__setattr__(self, "genes", genes)

    @property
    def canales(self):
        return self.genes.shape[0]

    @property
    def pasos(self):
        return self.genes.shape[1]

    @property
    def forma(self):
        return self.genes.shape

    def clave(self):
        """Identificador hashable de los genes (para cachés)."""
        return (self.genes.shape, self.genes.tobytes())

    def __eq__(self, otro):
        if not isinstance(otro, Cromosoma):
            return NotImplemented
        return np.array_equal(self.genes, otro.genes)

    __hash__ = None


# ============================================================================
# 2. CORRIDAS (NOTAS SOSTENIDAS)
# ============================================================================

def corridas(fila):
    """
    Separa una fila de genes en notas.

    Parámetros:
    -----------
    fila : array de enteros
        Genes de un canal

    Retorna:
    --------
    list of (inicio, fin, valor)
        Corridas de genes iguales no nulos, fin exclusivo
    """
    fila = np.asarray(fila)
    if fila.size == 0:
        return []
    cortes = np.flatnonzero(np.diff(fila)) + 1
    inicios = np.concatenate(([0], cortes))
    fines = np.concatenate((cortes, [fila.size]))
    return [(int(a), int(b), int(fila[a])) for a, b in zip(inicios, fines) if fila[a] != 0]


def contar_notas_matriz(matriz):
    """Número de notas de la matriz: corridas maximales de unos en cada fila."""
    celdas = matriz.celdas.astype(np.int8)
    if celdas.shape[1] == 0:
        return 0
    inicios = celdas[:, 0].sum() + np.count_nonzero((celdas[:, 1:] == 1) & (celdas[:, :-1] == 0))
    return int(inicios)


# ============================================================================
# 3. CONVERSIONES
# ============================================================================

def pieza_a_matriz(pieza):
    """
    Convierte una Pieza en su matriz de piano.

    La celda (r, c) vale 1 si algún evento de tecla r suena en el tick c
    (inicio ≤ c < inicio + duración). La matriz tiene tantas columnas como
    la duración total de la pieza.
    """
    celdas = np.zeros((NUMERO_TECLAS, pieza.duracion_total), dtype=np.uint8)
    for evento in pieza.eventos:
        celdas[evento.tono, evento.inicio:evento.fin] = 1
    return MatrizPiano(celdas)


def cromosoma_a_matriz(cromosoma):
    """
    Convierte un cromosoma en matriz: cada gen g no nulo en el paso c pone un
    1 en la celda (g - 1, c).
    """
    celdas = np.zeros((NUMERO_TECLAS, cromosoma.pasos), dtype=np.uint8)
    canal, paso = np.nonzero(cromosoma.genes)
    celdas[cromosoma.genes[canal, paso] - 1, paso] = 1
    return MatrizPiano(celdas)


def matriz_a_cromosoma(matriz, canales):
    """
    Reparte las notas de cada columna entre canales, de la más aguda (canal 0)
    a la más grave.

    Parámetros:
    -----------
    matriz : MatrizPiano
    canales : int
        Capacidad de voces simultáneas

    Retorna:
    --------
    Cromosoma

    Errores:
    --------
    DemasiadasVoces si alguna columna tiene más unos que canales.
    """
    if canales < 1:
        raise ValueError("Se necesita al menos un canal")
    celdas = matriz.celdas
    sonando = celdas.sum(axis=0)
    excedidas = np.flatnonzero(sonando > canales)
    if excedidas.size:
        columna = int(excedidas[0])
        raise DemasiadasVoces(columna, int(sonando[columna]), canales)

    genes = np.zeros((canales, matriz.columnas), dtype=np.int16)
    for columna in np.flatnonzero(sonando):
        teclas = np.flatnonzero(celdas[:, columna])[::-1]
        genes[:len(teclas), columna] = teclas + 1
    return Cromosoma(genes)


def canonizar(cromosoma):
    """Cromosoma equivalente con el convenio de canales (canal 0 = más agudo)."""
    return matriz_a_cromosoma(cromosoma_a_matriz(cromosoma), cromosoma.canales)


def cromosoma_a_pieza(cromosoma, compas=(4, 4), unidad="1/16", clave="C", titulo="", indice=1):
    """
    Convierte un cromosoma en Pieza para exportarlo a ABC.

    Cada corrida de un canal se convierte en un evento en la voz de ese
    canal. La duración total de la pieza es el número de pasos.
    """
    eventos = []
    for canal in range(cromosoma.canales):
        for inicio, fin, valor in corridas(cromosoma.genes[canal]):
            eventos.append(EventoNota(inicio, canal, valor - 1, fin - inicio))
    canales = max(e.voz for e in eventos) + 1 if eventos else cromosoma.canales
    return Pieza(
        eventos=tuple(eventos),
        compas=compas,
        unidad=Fraction(unidad),
        clave=clave,
        titulo=titulo,
        canales=canales,
        duracion_total=cromosoma.pasos,
        indice=indice,
    )


def pieza_a_cromosoma(pieza, canales=None):
    """
    Convierte una Pieza en cromosoma pasando por la matriz.

    Si no se indican canales se usa el máximo de notas simultáneas (al menos 1).
    """
    matriz = pieza_a_matriz(pieza)
    if canales is None:
        canales = max(1, int(matriz.celdas.sum(axis=0).max())) if matriz.columnas else 1
    return matriz_a_cromosoma(matriz, canales)


# ============================================================================
# 4. CSV Y FIGURAS
# ============================================================================

def matriz_a_dataframe(matriz):
    """Una fila por tick: columna tick y columnas k0..k87 binarias."""
    df = pd.DataFrame(matriz.celdas.T.astype(int), columns=COLUMNAS_CSV[1:])
    df.insert(0, "tick", np.arange(matriz.columnas))
    return df


def guardar_matriz_csv(matriz, ruta):
    """
    Exporta la matriz como CSV con cabecera tick,k0..k87.

    La lectura con cargar_matriz_csv reproduce la matriz bit a bit.
    """
    matriz_a_dataframe(matriz).to_csv(ruta, index=False)
    return ruta


def cargar_matriz_csv(ruta):
    """
    Lee una matriz exportada con guardar_matriz_csv.

    Errores:
    --------
    MatrizMalformada si el fichero no es un CSV legible o si la cabecera,
    la columna tick o las celdas no tienen el formato esperado.
    """
    try:
        df = pd.read_csv(ruta)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as error:
        raise MatrizMalformada(f"No se puede leer la matriz {ruta}: {error}") from error
    if list(df.columns) != COLUMNAS_CSV:
        raise MatrizMalformada(f"Cabecera de matriz inválida en {ruta}: se esperaba tick,k0..k87")
    if not np.array_equal(df["tick"].to_numpy(), np.arange(len(df))):
        raise MatrizMalformada(f"La columna tick de {ruta} debe ser 0, 1, 2, ...")
    celdas = df[COLUMNAS_CSV[1:]].to_numpy().T
    if np.any((celdas != 0) & (celdas != 1)):
        raise MatrizMalformada(f"Celdas no binarias en {ruta}")
    return MatrizPiano(celdas.astype(np.uint8))


def visualizar_matriz(matriz, ruta_guardado=None, titulo="Matriz de piano"):
    """
    Genera un mapa de calor de la matriz (solo las teclas usadas).

    Parámetros:
    -----------
    matriz : MatrizPiano
    ruta_guardado : str, optional
        Ruta para guardar la figura
    """
    filas = np.flatnonzero(matriz.celdas.any(axis=1))
    if filas.size == 0:
        filas = np.arange(NUMERO_TECLAS)
    rango = np.arange(filas.min(), filas.max() + 1)
    datos = pd.DataFrame(
        matriz.celdas[rango][::-1],
        index=[nombre_tecla(t) for t in rango[::-1]],
    )

    plt.figure(figsize=(14, max(4, len(rango) * 0.18)))
    sns.heatmap(datos, cmap="Greys", vmin=0, vmax=1, cbar=False, linewidths=0)
    plt.title(titulo, fontsize=14, fontweight="bold")
    plt.xlabel("Tick (1/64 de redonda)")
    plt.ylabel("Tecla")
    plt.tight_layout()

    if ruta_guardado:
        plt.savefig(ruta_guardado, dpi=150, bbox_inches="tight")

    return plt.gcf()


# ============================================================================
# 5. VALIDACIÓN
# ============================================================================

def validar_cromosoma(genes, canales_esperados=None, pasos_esperados=None):
    """
    Comprueba una rejilla de genes sin lanzar excepciones.

    Parámetros:
    -----------
    genes : array canales × pasos
        Genes en bruto (por ejemplo, obtenidos de una pieza)
    canales_esperados, pasos_esperados : int, optional
        Forma que exige la ejecución del algoritmo genético

    Retorna:
    --------
    dict
        {'valido': bool, 'errores': [...], 'advertencias': [...]}

    Explicación:
    ------------
    Son errores los genes fuera de 0..88, las alturas repetidas en un mismo
    paso y una forma distinta de la esperada. Es advertencia que los canales
    no sigan el orden descendente de alturas (se arregla con canonizar) o
    que el cromosoma no tenga ninguna nota.
    """
    resultados = {
        'valido': True,
        'errores': [],
        'advertencias': []
    }
    genes = np.asarray(genes)

    if genes.ndim != 2 or genes.shape[0] < 1:
        resultados['valido'] = False
        resultados['errores'].append(f"Forma {genes.shape} (debe ser canales × pasos)")
        return resultados

    canales, pasos = genes.shape
    if canales_esperados is not None and canales != canales_esperados:
        resultados['valido'] = False
        resultados['errores'].append(f"Canales = {canales} (deben ser {canales_esperados})")
    if pasos_esperados is not None and pasos != pasos_esperados:
        resultados['valido'] = False
        resultados['errores'].append(f"Pasos = {pasos} (deben ser {pasos_esperados})")

    fuera = np.flatnonzero(((genes < 0) | (genes > NUMERO_TECLAS)).any(axis=0))
    if fuera.size:
        resultados['valido'] = False
        resultados['errores'].append(f"Genes fuera de 0..{NUMERO_TECLAS} en los pasos: {fuera.tolist()}")

    if canales > 1:
        ordenados = np.sort(genes, axis=0)
        repetidos = np.flatnonzero(((ordenados[1:] == ordenados[:-1]) & (ordenados[1:] > 0)).any(axis=0))
        if repetidos.size:
            resultados['valido'] = False
            resultados['errores'].append(f"Alturas repetidas entre canales en los pasos: {repetidos.tolist()}")

    if resultados['valido']:
        if not np.any(genes):
            resultados['advertencias'].append("El cromosoma no contiene ninguna nota")
        elif canales > 1:
            cromosoma = Cromosoma(genes)
            if cromosoma != canonizar(cromosoma):
                resultados['advertencias'].append("Los canales no siguen el orden descendente de alturas")

    return resultados


def imprimir_validacion(resultados):
    """Muestra el resultado de validar_cromosoma."""
    print("\n" + "=" * 80)
    print("VALIDACIÓN DEL CROMOSOMA")
    print("=" * 80)
    print(f"Válido: {'SÍ' if resultados['valido'] else 'NO'}")
    for error in resultados['errores']:
        print(f"  ERROR: {error}")
    for aviso in resultados['advertencias']:
        print(f"  AVISO: {aviso}")
    print("=" * 80 + "\n")
