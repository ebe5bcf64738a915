# vdC 實驗室核心模組
