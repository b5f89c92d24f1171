"""
📁 SRC LAYER
Código fuente del ajustador de ganancias del cuadricóptero plano
"""
