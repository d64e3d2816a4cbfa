"""
INDICE_CORPUS: REFERENCIA ESTADÍSTICA DEL CORPUS HUMANO
=======================================================

Este módulo construye, guarda y consulta el índice del corpus de piezas
compuestas por personas, que es la referencia contra la que se mide la
similitud de los cromosomas.

FUNCIONALIDADES:
- Distribución de notas: probabilidad de cada tecla (y del silencio) como
  número de apariciones dividido por el total
- Conjuntos de n-gramas melódicos de órdenes 2, 3 y 4 (línea superior, sin silencios)
- Conjuntos de combinaciones verticales de clases de altura de tamaños 2, 3 y 4
- Distribución de duraciones de los eventos
- Muestreo de notas según la distribución (inicialización y mutación del GA)
- Fichero de índice versionado y exportación del histograma de notas

CÓMO FUNCIONA:
1. Cada evento cuenta una aparición de su tecla; cada hueco silencioso
   maximal dentro de un carril cuenta una aparición del silencio
2. La melodía es la línea superior: en cada instante, la nota más aguda que
   suena (el mismo convenio que el canal 0 del cromosoma). Los n-gramas se
   toman deslizando una ventana sobre sus alturas consecutivas
3. Cada columna de la matriz con dos o más notas se reduce a su conjunto de
   clases de altura (mod 12) y se guardan todos sus subconjuntos de tamaño 2-4
4. En el corpus se guardan tipos (conjuntos); el recuento por ocurrencias
   se hace del lado del cromosoma, en fitness
"""

import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import combinations
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
import seaborn as sns

from codec_abc import MIDI_A0, NUMERO_TECLAS, leer_abc, nombre_tecla
from errores import CorpusVacio, ErrorComposicion, IndiceMalformado, VersionNoCoincide
from matriz_piano import pieza_a_matriz

logger = logging.getLogger(__name__)

SILENCIO = -1
ORDENES = (2, 3, 4)
VERSION_FORMATO = 1

_RE_CABECERA = re.compile(r"^INDICE_CORPUS v(\d+) total_notas=(\d+) piezas=(\d+)$")


def clase_tono(tecla):
    """Clase de altura (C = 0) de un índice de tecla (A0 = 0)."""
    return (tecla + MIDI_A0) % 12


def subconjuntos_verticales(clases):
    """
    Todos los subconjuntos de tamaño 2-4 de un conjunto de clases de altura.

    Retorna:
    --------
    dict {tamaño: set de tuplas ordenadas}
    """
    clases = sorted(set(clases))
    return {k: set(combinations(clases, k)) for k in ORDENES}


# ============================================================================
# 1. TIPOS DE DATOS
# ============================================================================

@dataclass(frozen=True)
class DistribucionNotas:
    """
    Recuentos de apariciones por tecla (0-87) o SILENCIO.

    probabilidad(k) = conteos[k] / total
    """

    conteos: dict
    total: int

    @property
    def probabilidades(self):
        return {clave: cuenta / self.total for clave, cuenta in self.conteos.items()}

    def probabilidad(self, clave):
        return self.conteos.get(clave, 0) / self.total if self.total else 0.0

    def probabilidad_exacta(self, clave):
        """Probabilidad como fracción exacta."""
        if not self.total:
            return Fraction(0)
        return Fraction(self.conteos.get(clave, 0), self.total)

    @cached_property
    def _tabla(self):
        claves = np.array(sorted(self.conteos), dtype=np.int64)
        acumulada = np.cumsum([self.conteos[c] for c in claves]) / self.total
        return claves, acumulada

    @cached_property
    def _tabla_tonos(self):
        claves = np.array(sorted(c for c in self.conteos if c != SILENCIO), dtype=np.int64)
        pesos = np.array([self.conteos[c] for c in claves], dtype=float)
        return claves, np.cumsum(pesos) / pesos.sum() if pesos.size else pesos


@dataclass(frozen=True)
class IndiceCorpus:
    """
    Referencia estadística del corpus.

    Atributos:
    ----------
    distribucion : DistribucionNotas
    ngramas : dict {orden: frozenset de tuplas de teclas}
    verticales : dict {tamaño: frozenset de tuplas de clases de altura}
    duraciones : dict {ticks: recuento}
    total_notas : int
        M, número de eventos de nota del corpus
    numero_piezas : int
    """

    distribucion: DistribucionNotas
    ngramas: dict = field(default_factory=dict)
    verticales: dict = field(default_factory=dict)
    duraciones: dict = field(default_factory=dict)
    total_notas: int = 0
    numero_piezas: int = 0

    @property
    def distribucion_duraciones(self):
        total = sum(self.duraciones.values())
        return {ticks: cuenta / total for ticks, cuenta in sorted(self.duraciones.items())}


# ============================================================================
# 2. CONSTRUCCIÓN
# ============================================================================

def _contar_silencios(pieza):
    """Huecos silenciosos maximales de cada carril entre 0 y la duración total."""
    silencios = 0
    for voz in range(pieza.canales):
        cursor = 0
        for evento in pieza.eventos_voz(voz):
            if evento.inicio > cursor:
                silencios += 1
            cursor = max(cursor, evento.fin)
        if pieza.duracion_total > cursor:
            silencios += 1
    return silencios


def melodia_pieza(pieza):
    """
    Alturas de la línea superior de la pieza, en orden.

    En cada tramo entre inicios y finales de eventos la melodía es el evento
    más agudo que suena. Cada cambio de evento es una nota nueva, así que
    las notas repetidas se conservan; los silencios no aparecen.
    """
    eventos = pieza.eventos
    limites = sorted({e.inicio for e in eventos} | {e.fin for e in eventos})
    melodia = []
    anterior = None
    for instante in limites:
        sonando = [e for e in eventos if e.inicio <= instante < e.fin]
        if not sonando:
            anterior = None
            continue
        superior = max(sonando, key=lambda e: (e.tono, -e.voz))
        if superior != anterior:
            melodia.append(superior.tono)
        anterior = superior
    return melodia


def construir_indice(piezas):
    """
    Construye el índice a partir de las piezas del corpus.

    Parámetros:
    -----------
    piezas : list de Pieza

    Retorna:
    --------
    IndiceCorpus

    Errores:
    --------
    CorpusVacio si no hay piezas o si ninguna contiene notas (M = 0).
    """
    piezas = list(piezas)
    if not piezas:
        raise CorpusVacio("No hay piezas en el corpus")

    conteos = Counter()
    duraciones = Counter()
    ngramas = {k: set() for k in ORDENES}
    verticales = {k: set() for k in ORDENES}
    total_notas = 0

    for pieza in piezas:
        total_notas += len(pieza.eventos)
        for evento in pieza.eventos:
            conteos[evento.tono] += 1
            duraciones[evento.duracion] += 1
        silencios = _contar_silencios(pieza)
        if silencios:
            conteos[SILENCIO] += silencios

        melodia = melodia_pieza(pieza)
        for k in ORDENES:
            for i in range(len(melodia) - k + 1):
                ngramas[k].add(tuple(melodia[i:i + k]))

        celdas = pieza_a_matriz(pieza).celdas
        polifonicas = celdas[:, celdas.sum(axis=0) >= 2]
        if polifonicas.size:
            for columna in np.unique(polifonicas.T, axis=0):
                clases = {clase_tono(int(t)) for t in np.flatnonzero(columna)}
                for k, conjunto in subconjuntos_verticales(clases).items():
                    verticales[k].update(conjunto)

    if total_notas == 0:
        raise CorpusVacio("El corpus no contiene ninguna nota")

    indice = IndiceCorpus(
        distribucion=DistribucionNotas(dict(conteos), sum(conteos.values())),
        ngramas={k: frozenset(v) for k, v in ngramas.items()},
        verticales={k: frozenset(v) for k, v in verticales.items()},
        duraciones=dict(duraciones),
        total_notas=total_notas,
        numero_piezas=len(piezas),
    )
    logger.info("Índice construido: %d piezas, %d notas", len(piezas), total_notas)
    return indice


def leer_corpus(directorio, estricto=False):
    """
    Lee todos los ficheros .abc de un directorio (orden alfabético).

    Los ficheros que no se pueden interpretar se descartan con un aviso, salvo
    con estricto=True, en cuyo caso se propaga el primer error.

    Retorna:
    --------
    (piezas, descartados) : (list de Pieza, list de (nombre, motivo))
    """
    directorio = Path(directorio)
    if not directorio.is_dir():
        raise CorpusVacio(f"No existe el directorio del corpus: {directorio}")
    piezas, descartados = [], []
    for ruta in sorted(directorio.glob("*.abc")):
        try:
            piezas.append(leer_abc(ruta))
        except ErrorComposicion as error:
            if estricto:
                raise
            logger.warning("Se descarta %s: %s", ruta.name, error)
            descartados.append((ruta.name, str(error)))
    return piezas, descartados


# ============================================================================
# 3. CONSULTA Y MUESTREO
# ============================================================================

def probabilidad_nota(indice, clave):
    """Probabilidad de una tecla (o SILENCIO) en el corpus; 0 si no aparece."""
    return indice.distribucion.probabilidad(clave)


def probabilidad_exacta(indice, clave):
    """Como probabilidad_nota, pero como Fraction."""
    return indice.distribucion.probabilidad_exacta(clave)


def muestrear_nota(indice, rng):
    """
    Extrae una tecla o SILENCIO con probabilidad proporcional a su recuento.

    Parámetros:
    -----------
    indice : IndiceCorpus
    rng : np.random.Generator
        Fuente aleatoria con semilla; consume un único número por llamada
    """
    claves, acumulada = indice.distribucion._tabla
    posicion = int(np.searchsorted(acumulada, rng.random(), side="right"))
    return int(claves[min(posicion, len(claves) - 1)])


def muestrear_tono(indice, rng):
    """Como muestrear_nota pero condicionado a que no sea silencio."""
    claves, acumulada = indice.distribucion._tabla_tonos
    if claves.size == 0:
        raise CorpusVacio("El corpus no contiene ninguna nota con altura")
    posicion = int(np.searchsorted(acumulada, rng.random(), side="right"))
    return int(claves[min(posicion, len(claves) - 1)])


# ============================================================================
# 4. FICHERO DE ÍNDICE
# ============================================================================

def _texto_clave(clave):
    return "R" if clave == SILENCIO else str(clave)


def guardar_indice(indice, ruta):
    """
    Escribe el índice en un fichero de texto versionado.

    Formato:
    --------
    INDICE_CORPUS v1 total_notas=M piezas=P
    [NOTES]      clave,recuento (R = silencio)
    [NGRAMS2..4] teclas separadas por comas
    [VERT2..4]   clases de altura separadas por comas
    [DURS]       ticks,recuento

    Todas las secciones van ordenadas, así que el mismo índice produce
    siempre el mismo fichero.
    """
    lineas = [f"INDICE_CORPUS v{VERSION_FORMATO} total_notas={indice.total_notas} "
              f"piezas={indice.numero_piezas}"]
    lineas.append("[NOTES]")
    for clave in sorted(indice.distribucion.conteos):
        lineas.append(f"{_texto_clave(clave)},{indice.distribucion.conteos[clave]}")
    for k in ORDENES:
        lineas.append(f"[NGRAMS{k}]")
        lineas.extend(",".join(map(str, g)) for g in sorted(indice.ngramas.get(k, ())))
    for k in ORDENES:
        lineas.append(f"[VERT{k}]")
        lineas.extend(",".join(map(str, v)) for v in sorted(indice.verticales.get(k, ())))
    lineas.append("[DURS]")
    for ticks in sorted(indice.duraciones):
        lineas.append(f"{ticks},{indice.duraciones[ticks]}")

    ruta = Path(ruta)
    ruta.parent.mkdir(parents=True, exist_ok=True)
    ruta.write_text("\n".join(lineas) + "\n", encoding="utf-8")
    return ruta


def cargar_indice(ruta):
    """
    Lee un índice escrito con guardar_indice.

    Errores:
    --------
    VersionNoCoincide si la versión del fichero no es la actual;
    IndiceMalformado si alguna línea no se puede interpretar.
    """
    lineas = Path(ruta).read_text(encoding="utf-8").splitlines()
    if not lineas:
        raise IndiceMalformado(f"Fichero de índice vacío: {ruta}")
    cabecera = _RE_CABECERA.match(lineas[0].strip())
    if not cabecera:
        raise IndiceMalformado(f"Cabecera de índice inválida: {lineas[0]!r}")
    version, total_notas, numero_piezas = (int(g) for g in cabecera.groups())
    if version != VERSION_FORMATO:
        raise VersionNoCoincide(f"Índice en versión {version}; se esperaba {VERSION_FORMATO}")

    conteos, duraciones = {}, {}
    ngramas = {k: set() for k in ORDENES}
    verticales = {k: set() for k in ORDENES}
    seccion = None
    for numero, linea in enumerate(lineas[1:], start=2):
        linea = linea.strip()
        if not linea:
            continue
        if linea.startswith("["):
            seccion = linea
            continue
        try:
            valores = linea.split(",")
            if seccion == "[NOTES]":
                clave = SILENCIO if valores[0] == "R" else int(valores[0])
                conteos[clave] = int(valores[1])
            elif seccion == "[DURS]":
                duraciones[int(valores[0])] = int(valores[1])
            elif seccion and seccion.startswith("[NGRAMS"):
                k = int(seccion[7:-1])
                ngramas[k].add(tuple(int(v) for v in valores))
            elif seccion and seccion.startswith("[VERT"):
                k = int(seccion[5:-1])
                verticales[k].add(tuple(int(v) for v in valores))
            else:
                raise ValueError(seccion)
        except (ValueError, IndexError, KeyError):
            raise IndiceMalformado(f"Línea {numero} inválida en {ruta}: {linea!r}")

    return IndiceCorpus(
        distribucion=DistribucionNotas(conteos, sum(conteos.values())),
        ngramas={k: frozenset(v) for k, v in ngramas.items()},
        verticales={k: frozenset(v) for k, v in verticales.items()},
        duraciones=duraciones,
        total_notas=total_notas,
        numero_piezas=numero_piezas,
    )


# ============================================================================
# 5. INFORMES Y FIGURAS
# ============================================================================

def histograma_notas(indice):
    """DataFrame key,probability ordenado por clave (R para el silencio)."""
    claves = sorted(indice.distribucion.conteos)
    return pd.DataFrame({
        "key": [_texto_clave(c) for c in claves],
        "probability": [indice.distribucion.probabilidad(c) for c in claves],
    })


def exportar_histograma(indice, ruta_csv, ruta_figura=None):
    """
    Exporta el histograma de notas a CSV y, opcionalmente, como figura de barras.
    """
    df = histograma_notas(indice)
    df.to_csv(ruta_csv, index=False)

    if ruta_figura:
        etiquetas = [
            "Silencio" if clave == "R" else nombre_tecla(int(clave))
            for clave in df["key"]
        ]
        plt.figure(figsize=(max(8, len(df) * 0.35), 5))
        sns.barplot(x=etiquetas, y=df["probability"], color="steelblue")
        plt.title("Probabilidad de aparición de cada nota en el corpus", fontsize=14, fontweight="bold")
        plt.xlabel("Nota")
        plt.ylabel("Probabilidad")
        plt.xticks(rotation=90)
        plt.tight_layout()
        plt.savefig(ruta_figura, dpi=150, bbox_inches="tight")
        plt.close()

    return df


def resumen_indice(indice):
    """Tamaño de cada conjunto del índice en un DataFrame."""
    filas = [{"tipo": "ngramas", "orden": k, "tamano": len(indice.ngramas.get(k, ()))} for k in ORDENES]
    filas += [{"tipo": "verticales", "orden": k, "tamano": len(indice.verticales.get(k, ()))} for k in ORDENES]
    return pd.DataFrame(filas)


def imprimir_resumen_indice(indice):
    """
    Muestra un resumen del índice.

    Returns:
    --------
    None (imprime información en consola)
    """
    print("\n" + "=" * 80)
    print("ÍNDICE DEL CORPUS")
    print("=" * 80)
    print(f"Piezas: {indice.numero_piezas}")
    print(f"Notas (M): {indice.total_notas}")
    print(f"Teclas distintas: {sum(1 for c in indice.distribucion.conteos if c != SILENCIO)} de {NUMERO_TECLAS}")
    print(f"Probabilidad de silencio: {indice.distribucion.probabilidad(SILENCIO):.4f}")
    print()
    print(resumen_indice(indice).to_string(index=False))
    print("=" * 80 + "\n")
