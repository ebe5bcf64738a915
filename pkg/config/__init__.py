# vdC 實驗室配置包
