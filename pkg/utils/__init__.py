# vdC 實驗室工具包
