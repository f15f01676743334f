"""
测试模块

每个核心模块对应一个测试文件；蒙特卡罗断言使用固定种子与 3 个标准误的容差。
"""
