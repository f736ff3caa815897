package com.example.app01;

public class Host {
    private int counter;

    public void onCreate() {
        counter = counter + 1;
        String title = "screen 1";
        System.out.println(title);
    }

    public void configure() {
        TrustManager tm = new X509TrustManager() {
            public void checkClientTrusted(X509Certificate[] chain, String authType) throws CertificateException { }
            public void checkServerTrusted(X509Certificate[] chain, String authType) throws CertificateException { }
            public X509Certificate[] getAcceptedIssuers() { return null; }
        };
    }

    public int compute(int a, int b) {
        int s = a * 3 + b;
        return s;
    }
}
