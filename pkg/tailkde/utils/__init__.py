# 工具包初始化文件
