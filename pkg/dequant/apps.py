from django.apps import AppConfig


class DequantConfig(AppConfig):
    name = 'dequant'
    verbose_name = 'De-quantisation toolkit'
