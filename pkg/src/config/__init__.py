"""
📁 CONFIG LAYER
Tablas de parámetros y configuración de ejecución
"""
