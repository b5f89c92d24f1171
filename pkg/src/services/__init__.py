"""
📁 SERVICES LAYER
Red neuronal, PPO, monitoreo, métricas y evaluación
"""
