"""
📁 DOMAIN LAYER
Dinámica, controlador en cascada, trayectorias y entorno de decisión
"""
