typedef unsigned char u8;
typedef unsigned short u16;
typedef unsigned int u32;
typedef unsigned long size_t;
#define __init
#define __cold
#define EXPORT_SYMBOL(sym)
