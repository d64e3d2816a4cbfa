"""
FITNESS: COSTE, SIMILITUD Y FUNCIONES OBJETIVO
==============================================

Este módulo calcula todos los valores objetivo de los dos algoritmos
genéticos.

FUNCIONALIDADES:
- Coste: número de violaciones de reglas de ritmo, intervalo melódico,
  armonía y transición
- Similitud con el corpus:
  Score = (N2 + 10·N3 + 100·N4 + S2 + 10·S3 + 100·S4) / (M·L)
- Objetivo de GA1: Score + e / (e + Coste)
- Función compuesta de GA2: w1·norm(X1) + w2·X2/100 + w3·X3/100
- Evaluadores listos para el motor evolutivo

CÓMO FUNCIONA:
1. La melodía es el canal 0 del cromosoma: cada corrida de genes iguales no
   nulos es una nota
2. Del lado del corpus se usan conjuntos (tipos); del lado del cromosoma se
   cuenta cada ventana o columna que coincide (ocurrencias)
3. Las ventanas melódicas de N_k no atraviesan silencios, de modo que quitar
   una nota nunca crea una coincidencia nueva
4. L se cuenta sobre la matriz de piano (corridas de unos por fila), así que
   no depende de cómo se repartan las voces entre canales
"""

import logging
from dataclasses import asdict, dataclass, field, replace

import numpy as np
import pandas as pd

from config import PARAMETROS_COMPUESTO, PARAMETROS_REGLAS, parsear_fraccion
from codec_abc import TICKS_POR_REDONDA
from errores import ConfiguracionInvalida, PuntuacionFueraDeRango
from indice_corpus import ORDENES, clase_tono, subconjuntos_verticales
from matriz_piano import canonizar, contar_notas_matriz, corridas, cromosoma_a_matriz
from modelo_oyente import predecir, predecir_lote

logger = logging.getLogger(__name__)

POLITICAS_VERTICALES = ("corpus_o_triada", "corpus", "triada")
PESOS_ORDEN = {2: 1, 3: 10, 4: 100}
TRIADAS = tuple(
    frozenset({raiz, (raiz + tercera) % 12, (raiz + 7) % 12})
    for raiz in range(12)
    for tercera in (4, 3)
)
TRITONO = 6


# ============================================================================
# 1. CONFIGURACIÓN
# ============================================================================

@dataclass(frozen=True)
class ConfigReglas:
    """
    Reglas que generan coste.

    Atributos:
    ----------
    max_salto_melodico : int
        Salto máximo permitido entre notas consecutivas de la melodía (semitonos)
    prohibir_tritono : bool
        Penaliza los saltos de exactamente 6 semitonos
    ticks_compas : int
        Longitud del compás en ticks
    politica_vertical : str
        'corpus_o_triada', 'corpus' o 'triada'
    penalizar_transicion_no_vista : bool
        Penaliza los bigramas melódicos que no aparecen en el corpus
    epsilon : float
        Constante e del objetivo de GA1
    """

    max_salto_melodico: int = 12
    prohibir_tritono: bool = True
    ticks_compas: int = TICKS_POR_REDONDA
    politica_vertical: str = "corpus_o_triada"
    penalizar_transicion_no_vista: bool = True
    epsilon: float = 0.001

    def __post_init__(self):
        if self.max_salto_melodico < 1:
            raise ConfiguracionInvalida(f"max_salto_melodico debe ser >= 1: {self.max_salto_melodico}")
        if self.ticks_compas < 1:
            raise ConfiguracionInvalida(f"ticks_compas debe ser >= 1: {self.ticks_compas}")
        if self.politica_vertical not in POLITICAS_VERTICALES:
            raise ConfiguracionInvalida(
                f"Política vertical desconocida: {self.politica_vertical}. "
                f"Opciones válidas: {list(POLITICAS_VERTICALES)}"
            )
        if not self.epsilon > 0:
            raise ConfiguracionInvalida(f"epsilon debe ser positivo: {self.epsilon}")

    @classmethod
    def desde_parametros(cls, parametros=None):
        """Construye las reglas a partir de la sección [reglas] de la configuración."""
        parametros = dict(PARAMETROS_REGLAS, **(parametros or {}))
        num, den = parsear_fraccion(parametros["compas"], "compás")
        return cls(
            max_salto_melodico=parametros["max_salto_melodico"],
            prohibir_tritono=parametros["prohibir_tritono"],
            ticks_compas=max(1, TICKS_POR_REDONDA * num // den),
            politica_vertical=parametros["politica_vertical"],
            penalizar_transicion_no_vista=parametros["penalizar_transicion_no_vista"],
            epsilon=parametros["epsilon"],
        )


@dataclass(frozen=True)
class ConfigCompuesto:
    """Pesos de la función compuesta de GA2 y divisor que lleva X1 a [0, 1]."""

    w1: float = 1 / 3
    w2: float = 1 / 3
    w3: float = 1 / 3
    norma_gramatica: float = 2.0

    def __post_init__(self):
        if min(self.w1, self.w2, self.w3) < 0:
            raise ConfiguracionInvalida("Los pesos w1, w2, w3 no pueden ser negativos")
        if abs(self.w1 + self.w2 + self.w3 - 1.0) > 1e-12:
            raise ConfiguracionInvalida(
                f"Los pesos deben sumar 1 (suman {self.w1 + self.w2 + self.w3:.15f})"
            )
        if not self.norma_gramatica > 0:
            raise ConfiguracionInvalida(f"norma_gramatica debe ser positiva: {self.norma_gramatica}")

    @classmethod
    def desde_parametros(cls, parametros=None, norma_gramatica=None):
        parametros = dict(PARAMETROS_COMPUESTO, **(parametros or {}))
        return cls(
            w1=parametros["w1"],
            w2=parametros["w2"],
            w3=parametros["w3"],
            norma_gramatica=norma_gramatica if norma_gramatica is not None else parametros["norma_gramatica"],
        )


# ============================================================================
# 2. DESGLOSE
# ============================================================================

@dataclass(frozen=True)
class DesgloseFitness:
    """
    Todos los términos de la evaluación de un cromosoma.

    objetivo = score + epsilon / (epsilon + cost). En GA2 se rellenan además
    x1 (= objetivo), x2, x3 y compuesto.
    """

    score: float
    cost: int
    violaciones: dict
    objetivo: float
    n2: int
    n3: int
    n4: int
    s2: int
    s3: int
    s4: int
    m: int
    l: int
    epsilon: float
    x1: float = None
    x2: float = None
    x3: float = None
    compuesto: float = None

    @property
    def valor(self):
        """Valor que maximiza el algoritmo genético."""
        return self.compuesto if self.compuesto is not None else self.objetivo

    def a_fila(self):
        """Diccionario plano (una columna por campo) para los CSV de registro."""
        fila = asdict(self)
        violaciones = fila.pop("violaciones")
        for regla, cuenta in violaciones.items():
            fila[f"viol_{regla}"] = cuenta
        return fila


def desgloses_a_dataframe(desgloses, ids=None):
    """Convierte una lista de desgloses en DataFrame (una fila por pieza)."""
    df = pd.DataFrame([d.a_fila() for d in desgloses])
    if ids is not None:
        df.insert(0, "id", list(ids))
    return df


# ============================================================================
# 3. MELODÍA Y COLUMNAS
# ============================================================================

def notas_melodia(cromosoma):
    """Corridas del canal 0 como (inicio, fin, tecla)."""
    return [(a, b, valor - 1) for a, b, valor in corridas(cromosoma.genes[0])]


def _segmentos_melodia(notas):
    """Agrupa las notas de la melodía en tramos sin silencios intermedios."""
    segmentos = []
    for inicio, fin, tecla in notas:
        if segmentos and segmentos[-1][-1][1] == inicio:
            segmentos[-1].append((inicio, fin, tecla))
        else:
            segmentos.append([(inicio, fin, tecla)])
    return [[tecla for _, _, tecla in segmento] for segmento in segmentos]


def _clases_columnas(matriz):
    """Conjunto de clases de altura de cada columna con al menos dos notas."""
    celdas = matriz.celdas
    columnas = np.flatnonzero(celdas.sum(axis=0) >= 2)
    return [frozenset(clase_tono(int(t)) for t in np.flatnonzero(celdas[:, c])) for c in columnas]


def _vertical_permitida(clases, indice, politica):
    if len(clases) <= 1:
        return True
    en_corpus = tuple(sorted(clases)) in indice.verticales.get(len(clases), ())
    en_triada = any(clases <= triada for triada in TRIADAS)
    if politica == "corpus":
        return en_corpus
    if politica == "triada":
        return en_triada
    return en_corpus or en_triada


# ============================================================================
# 4. COSTE
# ============================================================================

def contar_violaciones(cromosoma, indice, reglas):
    """
    Cuenta las violaciones de cada regla.

    Parámetros:
    -----------
    cromosoma : Cromosoma
    indice : IndiceCorpus
    reglas : ConfigReglas

    Retorna:
    --------
    dict
        {'ritmo', 'intervalo', 'armonia', 'transicion'} con recuentos enteros

    Explicación:
    ------------
    - ritmo: +1 por cada barra de compás que una nota de la melodía atraviesa
      sonando, y +1 si el último compás está incompleto y la melodía suena en él
    - intervalo: por cada par de notas consecutivas de la melodía (saltando
      silencios), +1 si el salto supera max_salto_melodico y +1 si es un
      tritono exacto con prohibir_tritono
    - armonia: +1 por columna con dos o más notas cuyo conjunto de clases de
      altura no está permitido por la política vertical
    - transicion: +1 por bigrama melódico que no aparece en el corpus
    """
    notas = notas_melodia(cromosoma)
    compas = reglas.ticks_compas

    ritmo = sum((fin - 1) // compas - inicio // compas for inicio, fin, _ in notas)
    resto = cromosoma.pasos % compas
    if resto and any(fin > cromosoma.pasos - resto for _, fin, _ in notas):
        ritmo += 1

    intervalo = 0
    transicion = 0
    bigramas_corpus = indice.ngramas.get(2, frozenset())
    for (_, _, anterior), (_, _, siguiente) in zip(notas, notas[1:]):
        salto = abs(siguiente - anterior)
        if salto > reglas.max_salto_melodico:
            intervalo += 1
        if reglas.prohibir_tritono and salto == TRITONO:
            intervalo += 1
        if reglas.penalizar_transicion_no_vista and (anterior, siguiente) not in bigramas_corpus:
            transicion += 1

    armonia = sum(
        1
        for clases in _clases_columnas(cromosoma_a_matriz(cromosoma))
        if not _vertical_permitida(clases, indice, reglas.politica_vertical)
    )

    return {"ritmo": ritmo, "intervalo": intervalo, "armonia": armonia, "transicion": transicion}


# ============================================================================
# 5. SIMILITUD
# ============================================================================

@dataclass(frozen=True)
class Similitud:
    score: float
    n: dict = field(default_factory=dict)
    s: dict = field(default_factory=dict)
    m: int = 0
    l: int = 0


def puntuacion_similitud(cromosoma, indice):
    """
    Similitud con el corpus.

    Retorna:
    --------
    Similitud
        score y los recuentos N_k, S_k, M y L

    Explicación:
    ------------
    N_k: ventanas de k notas consecutivas de la melodía (dentro de un tramo
    sin silencios) que pertenecen al conjunto de n-gramas de orden k.
    S_k: columnas de la matriz en las que algún subconjunto de tamaño k de
    sus clases de altura pertenece al conjunto vertical de tamaño k.
    Si L = 0 (o M = 0) el score es 0.
    """
    n = {k: 0 for k in ORDENES}
    for segmento in _segmentos_melodia(notas_melodia(cromosoma)):
        for k in ORDENES:
            conjunto = indice.ngramas.get(k, frozenset())
            n[k] += sum(
                1 for i in range(len(segmento) - k + 1) if tuple(segmento[i:i + k]) in conjunto
            )

    matriz = cromosoma_a_matriz(cromosoma)
    s = {k: 0 for k in ORDENES}
    for clases in _clases_columnas(matriz):
        for k, subconjuntos in subconjuntos_verticales(clases).items():
            if not subconjuntos.isdisjoint(indice.verticales.get(k, frozenset())):
                s[k] += 1

    m = indice.total_notas
    l = contar_notas_matriz(matriz)
    numerador = sum(PESOS_ORDEN[k] * (n[k] + s[k]) for k in ORDENES)
    score = float(numerador) / (m * l) if m and l else 0.0
    return Similitud(score=score, n=n, s=s, m=m, l=l)


# ============================================================================
# 6. FUNCIONES OBJETIVO
# ============================================================================

def combinar_objetivo(score, coste, epsilon):
    """Score + e / (e + Coste)."""
    return score + epsilon / (epsilon + coste)


def objetivo_ga1(cromosoma, indice, reglas, epsilon=None):
    """
    Objetivo de la primera etapa: Score + e / (e + Coste), a maximizar.

    Parámetros:
    -----------
    epsilon : float, optional
        Si es None se usa reglas.epsilon

    Retorna:
    --------
    DesgloseFitness
    """
    epsilon = reglas.epsilon if epsilon is None else epsilon
    if not epsilon > 0:
        raise ConfiguracionInvalida(f"epsilon debe ser positivo: {epsilon}")

    violaciones = contar_violaciones(cromosoma, indice, reglas)
    coste = sum(violaciones.values())
    similitud = puntuacion_similitud(cromosoma, indice)
    return DesgloseFitness(
        score=similitud.score,
        cost=coste,
        violaciones=violaciones,
        objetivo=combinar_objetivo(similitud.score, coste, epsilon),
        n2=similitud.n[2], n3=similitud.n[3], n4=similitud.n[4],
        s2=similitud.s[2], s3=similitud.s[3], s4=similitud.s[4],
        m=similitud.m,
        l=similitud.l,
        epsilon=epsilon,
    )


def fitness_ga2(x1, x2, x3, compuesto):
    """
    Función compuesta de la segunda etapa.

    Parámetros:
    -----------
    x1 : float
        Objetivo gramatical (objetivo de GA1)
    x2, x3 : float
        Puntuaciones de los modelos experto y regular, en [0, 100]
    compuesto : ConfigCompuesto

    Retorna:
    --------
    float
        w1·min(x1 / norma_gramatica, 1) + w2·x2/100 + w3·x3/100
    """
    for nombre, valor in (("x2", x2), ("x3", x3)):
        if not 0 <= valor <= 100:
            raise PuntuacionFueraDeRango(f"{nombre} = {valor} fuera de [0, 100]")
    norma = min(x1 / compuesto.norma_gramatica, 1.0)
    return compuesto.w1 * norma + compuesto.w2 * (x2 / 100) + compuesto.w3 * (x3 / 100)


# ============================================================================
# 7. EVALUADORES PARA EL MOTOR EVOLUTIVO
# ============================================================================

class EvaluadorGA1:
    """
    Evalúa cromosomas con el objetivo de GA1.

    Se evalúa siempre la forma canónica del cromosoma (canal 0 = voz más
    aguda), que es la que se obtiene al volver a leer la pieza exportada.
    """

    def __init__(self, indice, reglas):
        self.indice = indice
        self.reglas = reglas

    def __call__(self, cromosoma):
        return objetivo_ga1(canonizar(cromosoma), self.indice, self.reglas)


class EvaluadorGA2(EvaluadorGA1):
    """
    Evalúa cromosomas con la función compuesta de GA2.

    Las predicciones de los dos modelos se guardan en caché durante dos
    generaciones, de modo que los individuos élite no se vuelven a evaluar.
    """

    def __init__(self, indice, reglas, red_experta, red_regular, compuesto):
        super().__init__(indice, reglas)
        self.red_experta = red_experta
        self.red_regular = red_regular
        self.compuesto = compuesto
        self._cache = {}
        self._cache_anterior = {}
        self._lote = {}
        self.aciertos_cache = 0

    def nueva_generacion(self, poblacion=None):
        """
        Rota la caché y, si se pasa la población, puntúa de una vez con
        ambos modelos los cromosomas que no estén ya en caché.
        """
        logger.debug("Caché de oyentes: %d entradas, %d aciertos acumulados", len(self._cache), self.aciertos_cache)
        self._cache_anterior, self._cache = self._cache, {}
        self._lote = {}
        if poblacion is None:
            return
        pendientes = {}
        for cromosoma in poblacion:
            canonico = canonizar(cromosoma)
            clave = canonico.clave()
            if clave not in self._cache_anterior and clave not in pendientes:
                pendientes[clave] = cromosoma_a_matriz(canonico)
        if not pendientes:
            return
        matrices = list(pendientes.values())
        expertas = predecir_lote(self.red_experta, matrices)
        regulares = predecir_lote(self.red_regular, matrices)
        for clave, x2, x3 in zip(pendientes, expertas, regulares):
            self._lote[clave] = (float(x2), float(x3))

    def _puntuaciones(self, cromosoma):
        clave = cromosoma.clave()
        if clave in self._cache:
            self.aciertos_cache += 1
            return self._cache[clave]
        if clave in self._cache_anterior:
            self.aciertos_cache += 1
            valor = self._cache_anterior[clave]
        elif clave in self._lote:
            valor = self._lote.pop(clave)
        else:
            matriz = cromosoma_a_matriz(cromosoma)
            valor = (predecir(self.red_experta, matriz), predecir(self.red_regular, matriz))
        self._cache[clave] = valor
        return valor

    def __call__(self, cromosoma):
        canonico = canonizar(cromosoma)
        desglose = objetivo_ga1(canonico, self.indice, self.reglas)
        x2, x3 = self._puntuaciones(canonico)
        return replace(
            desglose,
            x1=desglose.objetivo,
            x2=x2,
            x3=x3,
            compuesto=fitness_ga2(desglose.objetivo, x2, x3, self.compuesto),
        )
