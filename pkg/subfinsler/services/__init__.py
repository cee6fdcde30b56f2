"""Numerical Services"""
