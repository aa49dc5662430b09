from django.apps import AppConfig


class BoltzmannConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'boltzmann'
    verbose_name = 'RBM Training Experiments'
