/* Stub: only the typedefs the fixture sources need to parse. */
typedef unsigned char u8;
typedef unsigned short u16;
typedef unsigned int u32;
typedef unsigned long long u64;
typedef unsigned int __be32;
typedef unsigned short __be16;
typedef _Bool bool;
#define __init
#define __read_mostly
#define unlikely(x) (x)
#define likely(x) (x)
