#include <linux/types.h>
struct sock;
struct sk_buff;
struct tcphdr;
struct tcp_sock;
