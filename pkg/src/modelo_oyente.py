"""
MODELO_OYENTE: RED BI-LSTM QUE IMITA LA VALORACIÓN DE LOS OYENTES
=================================================================

Red recurrente bidireccional escrita directamente con numpy que asigna a una
matriz de piano una puntuación de 0 a 100. Se entrenan dos instancias
independientes: una con las valoraciones de oyentes expertos y otra con las de
oyentes no expertos.

ARQUITECTURA:
- Entrada: columnas de la matriz de piano (88 rasgos binarios por tick)
- Capa Bi-LSTM: una LSTM de izquierda a derecha y otra de derecha a
  izquierda, cada una con `oculto` neuronas (50 por defecto)
- Lectura: estado oculto final de cada dirección, concatenados (2·oculto)
- Capa totalmente conectada con una salida
- Regresión con pérdida RMSE; la salida se recorta a [0, 100] solo al predecir

ECUACIONES (por dirección, σ = sigmoide):
    i = σ(W_i x + U_i h + b_i)      f = σ(W_f x + U_f h + b_f)
    o = σ(W_o x + U_o h + b_o)      g = tanh(W_g x + U_g h + b_g)
    c' = f ⊙ c + i ⊙ g              h' = o ⊙ tanh(c')

El entrenamiento usa retropropagación en el tiempo sobre lotes de secuencias
de la misma longitud, recorte del gradiente por norma global y Adam (o
descenso de gradiente simple).
"""

import hashlib
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
from scipy.special import expit
from tqdm import tqdm

from codec_abc import NUMERO_TECLAS
from config import PARAMETROS_ENTRENAMIENTO
from errores import (
    ChecksumNoCoincide,
    ConfiguracionInvalida,
    DivergenciaDetectada,
    GrupoVacio,
    PuntuacionFueraDeRango,
    SecuenciaVacia,
    VersionNoCoincide,
)

logger = logging.getLogger(__name__)

DIRECCIONES = ("adelante", "atras")
PUERTAS = ("i", "f", "o", "g")
PUNTUACION_MAXIMA = 100.0

MAGIA = b"OYNT"
VERSION_CHECKPOINT = 1
_CABECERA = struct.Struct("<4sIII")
_TAMANO_RESUMEN = hashlib.sha256().digest_size


def nombres_parametros():
    """Nombres de los tensores en el orden en que se guardan."""
    nombres = []
    for direccion in DIRECCIONES:
        for matriz in ("W", "U", "b"):
            for puerta in PUERTAS:
                nombres.append(f"{direccion}.{matriz}_{puerta}")
    return nombres + ["fc_w", "fc_b"]


def formas_parametros(oculto, dim_entrada):
    formas = {}
    for direccion in DIRECCIONES:
        for puerta in PUERTAS:
            formas[f"{direccion}.W_{puerta}"] = (oculto, dim_entrada)
            formas[f"{direccion}.U_{puerta}"] = (oculto, oculto)
            formas[f"{direccion}.b_{puerta}"] = (oculto,)
    formas["fc_w"] = (2 * oculto,)
    formas["fc_b"] = ()
    return {nombre: formas[nombre] for nombre in nombres_parametros()}


# ============================================================================
# 1. RED
# ============================================================================

@dataclass
class RedOyente:
    """
    Parámetros de la red.

    Atributos:
    ----------
    oculto : int
        Neuronas por dirección
    dim_entrada : int
        Rasgos por tick (88 para matrices de piano)
    parametros : dict {nombre: np.ndarray}
        Tensores con las formas de formas_parametros
    """

    oculto: int
    dim_entrada: int = NUMERO_TECLAS
    parametros: dict = field(default_factory=dict)

    def __post_init__(self):
        formas = formas_parametros(self.oculto, self.dim_entrada)
        if not self.parametros:
            self.parametros = {nombre: np.zeros(forma) for nombre, forma in formas.items()}
        for nombre, forma in formas.items():
            if nombre not in self.parametros:
                raise ValueError(f"Falta el parámetro {nombre}")
            valor = np.asarray(self.parametros[nombre], dtype=np.float64)
            if valor.shape != forma:
                raise ValueError(f"Forma de {nombre}: {valor.shape}, se esperaba {forma}")
            self.parametros[nombre] = valor

    @classmethod
    def inicializar(cls, oculto=50, dim_entrada=NUMERO_TECLAS, semilla=0):
        """
        Inicialización uniforme en [-1/√oculto, 1/√oculto], con +1 en el sesgo
        de la puerta de olvido y sesgo de salida 0.
        """
        rng = np.random.default_rng(semilla)
        limite = 1.0 / np.sqrt(oculto)
        parametros = {}
        for nombre, forma in formas_parametros(oculto, dim_entrada).items():
            if nombre == "fc_b":
                parametros[nombre] = np.zeros(forma)
            else:
                parametros[nombre] = rng.uniform(-limite, limite, size=forma)
        for direccion in DIRECCIONES:
            parametros[f"{direccion}.b_f"] += 1.0
        return cls(oculto, dim_entrada, parametros)

    def copiar(self):
        return RedOyente(
            self.oculto,
            self.dim_entrada,
            {nombre: valor.copy() for nombre, valor in self.parametros.items()},
        )

    def es_finita(self):
        return all(np.all(np.isfinite(valor)) for valor in self.parametros.values())

    def _apiladas(self, direccion):
        """Matrices de las cuatro puertas apiladas: W (4H, D), U (4H, H), b (4H)."""
        p = self.parametros
        W = np.concatenate([p[f"{direccion}.W_{g}"] for g in PUERTAS], axis=0)
        U = np.concatenate([p[f"{direccion}.U_{g}"] for g in PUERTAS], axis=0)
        b = np.concatenate([p[f"{direccion}.b_{g}"] for g in PUERTAS])
        return W, U, b


# ============================================================================
# 2. PROPAGACIÓN HACIA DELANTE
# ============================================================================

def _lstm_adelante(W, U, b, X):
    """
    Recorre X (B, T, D) de t = 0 a T-1.

    Retorna el estado oculto final (B, H) y la caché de cada paso para la
    retropropagación.
    """
    lote, pasos, _ = X.shape
    oculto = U.shape[1]
    h = np.zeros((lote, oculto))
    c = np.zeros((lote, oculto))
    cache = []
    for t in range(pasos):
        x = X[:, t, :]
        z = x @ W.T + h @ U.T + b
        i = expit(z[:, :oculto])
        f = expit(z[:, oculto:2 * oculto])
        o = expit(z[:, 2 * oculto:3 * oculto])
        g = np.tanh(z[:, 3 * oculto:])
        c_nuevo = f * c + i * g
        tanh_c = np.tanh(c_nuevo)
        h_nuevo = o * tanh_c
        cache.append((x, h, c, i, f, o, g, tanh_c))
        h, c = h_nuevo, c_nuevo
    return h, cache


def _entrada_lote(red, X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 2:
        X = X[None]
    if X.ndim != 3 or X.shape[1] == 0:
        raise SecuenciaVacia(f"Se necesita al menos un tick; forma recibida {X.shape}")
    if X.shape[2] != red.dim_entrada:
        raise ValueError(f"La entrada tiene {X.shape[2]} rasgos y la red espera {red.dim_entrada}")
    return X


def _propagar(red, X):
    W_a, U_a, b_a = red._apiladas("adelante")
    W_r, U_r, b_r = red._apiladas("atras")
    h_a, cache_a = _lstm_adelante(W_a, U_a, b_a, X)
    h_r, cache_r = _lstm_adelante(W_r, U_r, b_r, X[:, ::-1, :])
    rasgos = np.concatenate([h_a, h_r], axis=1)
    salida = rasgos @ red.parametros["fc_w"] + red.parametros["fc_b"]
    return salida, rasgos, cache_a, cache_r


def caracteristicas(red, X):
    """Vector concatenado [h adelante final, h atrás final], forma (B, 2·oculto)."""
    return _propagar(red, _entrada_lote(red, X))[1]


def salida_cruda(red, X):
    """
    Salida de la capa final sin recortar.

    Parámetros:
    -----------
    X : np.ndarray (T, D) o (B, T, D)
        Secuencias de la misma longitud, tick en el eje 1

    Retorna:
    --------
    np.ndarray (B,)
    """
    return _propagar(red, _entrada_lote(red, X))[0]


def recortar(valor):
    return np.clip(valor, 0.0, PUNTUACION_MAXIMA)


def predecir(red, matriz):
    """
    Puntuación de 0 a 100 de una matriz de piano.

    Errores:
    --------
    SecuenciaVacia si la matriz no tiene columnas.
    """
    if matriz.columnas == 0:
        raise SecuenciaVacia("La matriz de piano no tiene columnas")
    return float(recortar(salida_cruda(red, matriz.celdas.T)[0]))


def predecir_lote(red, matrices):
    """Predice varias matrices agrupando las de igual longitud."""
    resultado = np.zeros(len(matrices))
    for longitud, indices in _agrupar_por_longitud([m.columnas for m in matrices]).items():
        if longitud == 0:
            raise SecuenciaVacia("La matriz de piano no tiene columnas")
        X = np.stack([matrices[i].celdas.T for i in indices])
        resultado[indices] = recortar(salida_cruda(red, X))
    return resultado


def _agrupar_por_longitud(longitudes):
    grupos = {}
    for indice, longitud in enumerate(longitudes):
        grupos.setdefault(longitud, []).append(indice)
    return grupos


# ============================================================================
# 3. PÉRDIDA Y GRADIENTES
# ============================================================================

def _lstm_atras(W, U, cache, dh):
    """Retropropagación en el tiempo de una dirección a partir de dL/dh final."""
    oculto = U.shape[1]
    dW = np.zeros_like(W)
    dU = np.zeros_like(U)
    db = np.zeros(W.shape[0])
    dc = np.zeros_like(dh)
    for x, h_previo, c_previo, i, f, o, g, tanh_c in reversed(cache):
        do = dh * tanh_c
        dc = dc + dh * o * (1.0 - tanh_c ** 2)
        dz = np.concatenate([
            dc * g * i * (1.0 - i),
            dc * c_previo * f * (1.0 - f),
            do * o * (1.0 - o),
            dc * i * (1.0 - g ** 2),
        ], axis=1)
        dW += dz.T @ x
        dU += dz.T @ h_previo
        db += dz.sum(axis=0)
        dh = dz @ U
        dc = dc * f
    return dW, dU, db


def _separar(gradientes, direccion, dW, dU, db, oculto):
    for k, puerta in enumerate(PUERTAS):
        bloque = slice(k * oculto, (k + 1) * oculto)
        gradientes[f"{direccion}.W_{puerta}"] = dW[bloque]
        gradientes[f"{direccion}.U_{puerta}"] = dU[bloque]
        gradientes[f"{direccion}.b_{puerta}"] = db[bloque]


def perdida_y_gradientes(red, X, objetivos):
    """
    RMSE del lote y gradientes de todos los parámetros.

    Parámetros:
    -----------
    red : RedOyente
    X : np.ndarray (B, T, D)
    objetivos : array (B,)
        Puntuaciones medias en [0, 100]

    Retorna:
    --------
    (rmse, gradientes) : (float, dict {nombre: np.ndarray})

    Explicación:
    ------------
    La pérdida se calcula sobre la salida sin recortar. Si el RMSE es 0 todos
    los gradientes son 0.
    """
    X = _entrada_lote(red, X)
    objetivos = np.asarray(objetivos, dtype=np.float64).reshape(-1)
    salida, rasgos, cache_a, cache_r = _propagar(red, X)
    residuo = salida - objetivos
    rmse = float(np.sqrt(np.mean(residuo ** 2)))

    lote = len(objetivos)
    dsalida = residuo / (lote * rmse) if rmse > 0 else np.zeros_like(residuo)

    gradientes = {
        "fc_w": rasgos.T @ dsalida,
        "fc_b": np.asarray(dsalida.sum()),
    }
    drasgos = dsalida[:, None] * red.parametros["fc_w"][None, :]
    oculto = red.oculto
    for direccion, cache, dh in (
        ("adelante", cache_a, drasgos[:, :oculto]),
        ("atras", cache_r, drasgos[:, oculto:]),
    ):
        W, U, _ = red._apiladas(direccion)
        dW, dU, db = _lstm_atras(W, U, cache, dh)
        _separar(gradientes, direccion, dW, dU, db, oculto)

    return rmse, {nombre: gradientes[nombre] for nombre in nombres_parametros()}


# ============================================================================
# 4. ENTRENAMIENTO
# ============================================================================

OPTIMIZADORES = ("adam", "gd")


@dataclass(frozen=True)
class ConfigEntrenamiento:
    """
    Hiperparámetros del entrenamiento.

    Una tasa de aprendizaje 0 está permitida: deja los parámetros intactos.
    """

    epocas: int = 5000
    tasa_aprendizaje: float = 1e-3
    semilla: int = 0
    optimizador: str = "adam"
    tamano_lote: int = 1
    recorte_norma: float = 5.0

    def __post_init__(self):
        if self.epocas < 1:
            raise ConfiguracionInvalida(f"epocas debe ser >= 1: {self.epocas}")
        if self.tasa_aprendizaje < 0:
            raise ConfiguracionInvalida(f"tasa_aprendizaje no puede ser negativa: {self.tasa_aprendizaje}")
        if self.optimizador not in OPTIMIZADORES:
            raise ConfiguracionInvalida(
                f"Optimizador desconocido: {self.optimizador}. Opciones válidas: {list(OPTIMIZADORES)}"
            )
        if self.tamano_lote < 1:
            raise ConfiguracionInvalida(f"tamano_lote debe ser >= 1: {self.tamano_lote}")
        if not self.recorte_norma > 0:
            raise ConfiguracionInvalida(f"recorte_norma debe ser positivo: {self.recorte_norma}")

    @classmethod
    def desde_parametros(cls, parametros=None):
        parametros = dict(PARAMETROS_ENTRENAMIENTO, **(parametros or {}))
        return cls(
            epocas=parametros["epocas"],
            tasa_aprendizaje=parametros["tasa_aprendizaje"],
            semilla=parametros["semilla"],
            optimizador=parametros["optimizador"],
            tamano_lote=parametros["tamano_lote"],
            recorte_norma=parametros["recorte_norma"],
        )


@dataclass(frozen=True)
class ConjuntoValoraciones:
    """
    Piezas valoradas por un grupo de oyentes.

    Atributos:
    ----------
    elementos : tuple de (MatrizPiano, float)
        Matriz y puntuación media en [0, 100]
    grupo : str
        'expert' o 'regular'
    valoradores : tuple de int
        Número de valoraciones de cada pieza
    ids : tuple de str
    """

    elementos: tuple
    grupo: str = "expert"
    valoradores: tuple = ()
    ids: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "elementos", tuple(self.elementos))
        for posicion, (_, puntuacion) in enumerate(self.elementos):
            if not 0 <= puntuacion <= PUNTUACION_MAXIMA:
                raise PuntuacionFueraDeRango(
                    f"Puntuación {puntuacion} del elemento {posicion} fuera de [0, 100]"
                )

    def __len__(self):
        return len(self.elementos)


class Adam:
    """Estimación adaptativa de momentos con corrección de sesgo."""

    def __init__(self, tasa, beta1=0.9, beta2=0.999, eps=1e-8):
        self.tasa = tasa
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = {}
        self.v = {}
        self.t = 0

    def pasos(self, gradientes):
        self.t += 1
        correccion1 = 1.0 - self.beta1 ** self.t
        correccion2 = 1.0 - self.beta2 ** self.t
        pasos = {}
        for nombre, g in gradientes.items():
            m = self.beta1 * self.m.get(nombre, 0.0) + (1.0 - self.beta1) * g
            v = self.beta2 * self.v.get(nombre, 0.0) + (1.0 - self.beta2) * g ** 2
            self.m[nombre], self.v[nombre] = m, v
            pasos[nombre] = self.tasa * (m / correccion1) / (np.sqrt(v / correccion2) + self.eps)
        return pasos


class DescensoGradiente:
    def __init__(self, tasa):
        self.tasa = tasa

    def pasos(self, gradientes):
        return {nombre: self.tasa * g for nombre, g in gradientes.items()}


def _recortar_gradientes(gradientes, norma_maxima):
    norma = np.sqrt(sum(float(np.sum(g ** 2)) for g in gradientes.values()))
    if norma > norma_maxima:
        escala = norma_maxima / norma
        return {nombre: g * escala for nombre, g in gradientes.items()}
    return gradientes


def _lotes_epoca(longitudes, tamano_lote, rng):
    """
    Orden aleatorio de los elementos en lotes de secuencias de igual longitud.
    """
    permutacion = rng.permutation(len(longitudes))
    grupos = {}
    for indice in permutacion:
        grupos.setdefault(longitudes[indice], []).append(int(indice))
    lotes = [
        indices[i:i + tamano_lote]
        for _, indices in sorted(grupos.items())
        for i in range(0, len(indices), tamano_lote)
    ]
    return [lotes[k] for k in rng.permutation(len(lotes))]


def entrenar(red, conjunto, config, mostrar_progreso=False):
    """
    Entrena una copia de la red con las valoraciones de un grupo.

    Parámetros:
    -----------
    red : RedOyente
        Red inicial (no se modifica)
    conjunto : ConjuntoValoraciones
    config : ConfigEntrenamiento
    mostrar_progreso : bool
        Barra de progreso por épocas

    Retorna:
    --------
    (red_entrenada, curva) : (RedOyente, list de float)
        curva[e] es el RMSE de todas las pasadas de la época e

    Errores:
    --------
    GrupoVacio si no hay elementos; DivergenciaDetectada si la pérdida o una
    actualización deja de ser finita (lleva la red en su último estado finito).
    """
    if len(conjunto) == 0:
        raise GrupoVacio(f"El grupo {conjunto.grupo!r} no tiene piezas valoradas")

    red = red.copiar()
    rng = np.random.default_rng(config.semilla)
    if config.optimizador == "adam":
        optimizador = Adam(config.tasa_aprendizaje)
    else:
        optimizador = DescensoGradiente(config.tasa_aprendizaje)

    secuencias = [matriz.celdas.T.astype(np.float64) for matriz, _ in conjunto.elementos]
    objetivos = np.array([puntuacion for _, puntuacion in conjunto.elementos], dtype=np.float64)
    longitudes = [len(s) for s in secuencias]
    if min(longitudes) == 0:
        raise SecuenciaVacia("Hay piezas valoradas sin columnas")

    curva = []
    epocas = tqdm(range(1, config.epocas + 1), desc=f"Entrenando ({conjunto.grupo})",
                  disable=not mostrar_progreso)
    for epoca in epocas:
        error_cuadratico = 0.0
        for lote in _lotes_epoca(longitudes, config.tamano_lote, rng):
            X = np.stack([secuencias[i] for i in lote])
            rmse, gradientes = perdida_y_gradientes(red, X, objetivos[lote])
            if not np.isfinite(rmse) or not all(np.all(np.isfinite(g)) for g in gradientes.values()):
                logger.error("Pérdida no finita en la época %d", epoca)
                raise DivergenciaDetectada(epoca, red, curva)

            pasos = optimizador.pasos(_recortar_gradientes(gradientes, config.recorte_norma))
            nuevos = {nombre: red.parametros[nombre] - pasos[nombre] for nombre in red.parametros}
            if not all(np.all(np.isfinite(valor)) for valor in nuevos.values()):
                logger.error("Actualización no finita en la época %d", epoca)
                raise DivergenciaDetectada(epoca, red, curva)
            red.parametros = nuevos
            error_cuadratico += rmse ** 2 * len(lote)

        curva.append(float(np.sqrt(error_cuadratico / len(secuencias))))
        if mostrar_progreso:
            epocas.set_postfix(rmse=f"{curva[-1]:.3f}")

    logger.info("Entrenamiento %s: RMSE inicial %.4f, final %.4f", conjunto.grupo, curva[0], curva[-1])
    return red, curva


def curva_a_dataframe(curva):
    return pd.DataFrame({"epoch": np.arange(1, len(curva) + 1), "rmse": curva})


def visualizar_curva(curvas, ruta_guardado=None):
    """
    Dibuja una o varias curvas de pérdida.

    Parámetros:
    -----------
    curvas : dict {etiqueta: list de float}
    ruta_guardado : str, optional
    """
    plt.figure(figsize=(10, 6))
    for etiqueta, curva in curvas.items():
        plt.plot(np.arange(1, len(curva) + 1), curva, linewidth=2, label=etiqueta)
    plt.xlabel("Época", fontsize=12)
    plt.ylabel("RMSE", fontsize=12)
    plt.title("Curva de entrenamiento de los modelos de oyentes", fontsize=14, fontweight="bold")
    plt.legend(fontsize=10)
    plt.grid(True, alpha=0.3)
    plt.tight_layout()
    if ruta_guardado:
        plt.savefig(ruta_guardado, dpi=150, bbox_inches="tight")
    plt.close()


# ============================================================================
# 5. CHECKPOINTS
# ============================================================================

def guardar_modelo(red, ruta):
    """
    Guarda la red en un fichero binario.

    Formato:
    --------
    b"OYNT" | versión, oculto, dim_entrada (uint32 little-endian) |
    tensores en el orden de nombres_parametros como float64 little-endian |
    sha256 de todo lo anterior
    """
    cuerpo = bytearray(_CABECERA.pack(MAGIA, VERSION_CHECKPOINT, red.oculto, red.dim_entrada))
    for nombre in nombres_parametros():
        cuerpo += np.ascontiguousarray(red.parametros[nombre], dtype="<f8").tobytes()
    cuerpo += hashlib.sha256(cuerpo).digest()

    ruta = Path(ruta)
    ruta.parent.mkdir(parents=True, exist_ok=True)
    ruta.write_bytes(bytes(cuerpo))
    return ruta


def cargar_modelo(ruta, oculto=None, dim_entrada=None):
    """
    Carga una red guardada con guardar_modelo.

    Parámetros:
    -----------
    oculto, dim_entrada : int, optional
        Dimensiones que espera quien carga la red

    Errores:
    --------
    ChecksumNoCoincide si el fichero está truncado o corrupto (se comprueba
    primero); VersionNoCoincide si la versión o las dimensiones no son las
    esperadas.
    """
    datos = Path(ruta).read_bytes()
    if len(datos) < _CABECERA.size + _TAMANO_RESUMEN:
        raise ChecksumNoCoincide(f"Checkpoint truncado: {ruta} ({len(datos)} bytes)")
    cuerpo, resumen = datos[:-_TAMANO_RESUMEN], datos[-_TAMANO_RESUMEN:]
    if hashlib.sha256(cuerpo).digest() != resumen:
        raise ChecksumNoCoincide(f"La suma de comprobación de {ruta} no coincide")

    magia, version, oculto_fichero, entrada_fichero = _CABECERA.unpack_from(cuerpo)
    if magia != MAGIA:
        raise VersionNoCoincide(f"{ruta} no es un checkpoint de modelo de oyente")
    if version != VERSION_CHECKPOINT:
        raise VersionNoCoincide(f"Checkpoint en versión {version}; se esperaba {VERSION_CHECKPOINT}")

    formas_fichero = formas_parametros(oculto_fichero, entrada_fichero)
    esperadas = formas_parametros(
        oculto if oculto is not None else oculto_fichero,
        dim_entrada if dim_entrada is not None else entrada_fichero,
    )
    for nombre in nombres_parametros():
        if esperadas[nombre] != formas_fichero[nombre]:
            raise VersionNoCoincide(
                f"Forma de {nombre}: declarada {esperadas[nombre]}, encontrada {formas_fichero[nombre]}"
            )

    parametros = {}
    posicion = _CABECERA.size
    for nombre, forma in formas_fichero.items():
        cantidad = int(np.prod(forma, dtype=np.int64))
        fin = posicion + 8 * cantidad
        if fin > len(cuerpo):
            raise VersionNoCoincide(f"El checkpoint no contiene datos suficientes para {nombre} {forma}")
        parametros[nombre] = np.frombuffer(cuerpo[posicion:fin], dtype="<f8").astype(np.float64).reshape(forma)
        posicion = fin
    if posicion != len(cuerpo):
        raise VersionNoCoincide(f"El checkpoint tiene {len(cuerpo) - posicion} bytes de más")

    return RedOyente(oculto_fichero, entrada_fichero, parametros)
