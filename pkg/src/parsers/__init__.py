"""Scenario file parsing modules"""
